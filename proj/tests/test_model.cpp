// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "esgnn/core/error.h"
#include "esgnn/harmonics/align.h"
#include "esgnn/harmonics/wigner.h"
#include "esgnn/model/network.h"
#include "esgnn/model/synthetic.h"

using namespace esgnn;
using namespace esgnn::model;
using structures::AtomicStructure;
using structures::BasisSet;
using structures::Graph;

namespace {

BasisSet sp_basis() {
  BasisSet b;
  b.add_species(1, {0, 1});
  b.add_species(8, {0, 1});
  return b;
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.l_max = 2;
  cfg.e_width = 4;
  cfg.layers = 2;
  cfg.n_radial = 8;
  cfg.r_cut = 3.4;
  cfg.seed = 11;
  return cfg;
}

AtomicStructure path_structure(int n, double spacing = 2.0) {
  AtomicStructure s;
  s.pbc = {false, false, false};
  for (int i = 0; i < n; ++i) {
    s.positions.push_back({i * spacing, 0.1 * (i % 2), -0.05 * i});
    s.species.push_back(1);
  }
  return s;
}

void fill_random(Tensor<double>& t, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& x : t.v) x = n(rng);
}

// Applies the degree blocks of one rotation to a degree-major tensor.
void rotate_degree_major(const std::vector<Eigen::MatrixXd>& blocks, const Tensor<double>& x,
                         Tensor<double>& y) {
  y.require(x.n, x.h, x.c);
  for (int i = 0; i < x.n; ++i)
    for (size_t l = 0; l < blocks.size(); ++l) {
      const int d = 2 * int(l) + 1;
      kernels::ConstMatMap<double> xm(x.row(i) + size_t(l * l) * x.c, d, x.c);
      kernels::MatMap<double> ym(y.row(i) + size_t(l * l) * y.c, d, y.c);
      ym = blocks[l] * xm;
    }
}

Eigen::MatrixXd orbital_rotation(const BasisSet& basis, int z,
                                 const std::vector<Eigen::MatrixXd>& blocks) {
  const int n = basis.n_orbitals(z);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  int at = 0;
  for (int l : basis.shells(z)) {
    d.block(at, at, 2 * l + 1, 2 * l + 1) = blocks[l];
    at += 2 * l + 1;
  }
  return d;
}

AtomicStructure rotated(const AtomicStructure& s, const Eigen::Matrix3d& r) {
  AtomicStructure out = s;
  for (auto& p : out.positions) p = r * p;
  out.cell = s.cell * r.transpose();
  return out;
}

double network_loss(Network<double>& net, const Prepared<double>& prep,
                    const TargetBuffers<double>& tb, long n_total) {
  Tape<double> tape;
  auto fwd = net.build_forward(tape, prep);
  auto p = net.record_loss(tape, fwd, tb, n_total);
  return (p.sum_abs + p.sum_sq) / double(n_total);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("order-major layout is a self-inverse pairing") {
  const auto& lay = MMajorLayout::get(2);
  CHECK(lay.h == 9);
  // (0,0),(1,0),(2,0) then m=1 minus (1,-1),(2,-1), plus (1,1),(2,1),
  // then m=2 minus (2,-2), plus (2,2)
  CHECK(lay.to_m == std::vector<int>{0, 3, 1, 5, 7, 4, 2, 6, 8});
  for (int r = 0; r < lay.h; ++r) {
    CHECK(lay.to_l[lay.to_m[r]] == r);
    CHECK(lay.to_m[lay.to_l[r]] == r);
  }
  CHECK(lay.m_offset[1] == 3);
  CHECK(lay.m_offset[2] == 7);
  CHECK(lay.n_degrees(0) == 3);
  CHECK(lay.n_degrees(2) == 1);
}

TEST_CASE("message concatenation gathers endpoint and edge rows") {
  AtomicStructure s = path_structure(3);
  Graph g = structures::build_graph(s, 2.5);
  GraphView view = serial_view(g, s.species);
  const int h = 4, e = 2;
  std::mt19937_64 rng(1);
  Tape<double> tape;
  Tensor<double> nodes(view.n_rows, h, e), edges(view.n_edges(), h, e);
  fill_random(nodes, rng);
  fill_random(edges, rng);
  const int nv = tape.create(nodes);
  const int ev = tape.create(edges);
  const int mv = ops::concat_message(tape, nv, ev, view);
  const auto& m = tape.val(mv);
  m.require(view.n_edges(), h, 3 * e);
  for (int k = 0; k < view.n_edges(); ++k)
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < e; ++c) {
        CHECK(m.at(k, r, 0 * e + c) == tape.val(nv).at(view.edges[k].src_row, r, c));
        CHECK(m.at(k, r, 1 * e + c) == tape.val(nv).at(view.edges[k].dst_row, r, c));
        CHECK(m.at(k, r, 2 * e + c) == tape.val(ev).at(k, r, c));
      }
}

TEST_CASE("per-order linear map commutes with rotations about the pole") {
  const int l_max = 3, cin = 3, cout = 3;
  const auto& lay = MMajorLayout::get(l_max);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);

  ParamStore<double> store;
  store.add("m0", lay.n_degrees(0) * cout, lay.n_degrees(0) * cin, 4);
  for (int m = 1; m <= l_max; ++m) {
    store.add("m" + std::to_string(m) + "r", lay.n_degrees(m) * cout, lay.n_degrees(m) * cin, 4);
    store.add("m" + std::to_string(m) + "i", lay.n_degrees(m) * cout, lay.n_degrees(m) * cin, 4);
  }
  store.init(3);

  auto apply = [&](const Tensor<double>& x_degree_major) {
    Tape<double> tape;
    ops::So2ParamVars w;
    w.m0 = tape.adopt(store.at("m0"));
    for (int m = 1; m <= l_max; ++m) {
      w.wr.push_back(tape.adopt(store.at("m" + std::to_string(m) + "r")));
      w.wi.push_back(tape.adopt(store.at("m" + std::to_string(m) + "i")));
    }
    const int x = tape.create(x_degree_major);
    const int y = ops::permute(tape, ops::so2_linear(tape, ops::permute(tape, x, lay.to_m), w,
                                                     lay, cin, cout),
                               lay.to_l);
    return tape.val(y);
  };

  Tensor<double> x(2, lay.h, cin);
  fill_random(x, rng);
  const auto blocks = harmonics::wigner_blocks(l_max, harmonics::rotation_y(u(rng)));

  Tensor<double> rx(2, lay.h, cin);
  rotate_degree_major(blocks, x, rx);
  Tensor<double> want(2, lay.h, cout);
  rotate_degree_major(blocks, apply(x), want);
  Tensor<double> got = apply(rx);
  for (size_t k = 0; k < got.v.size(); ++k) CHECK(std::abs(got.v[k] - want.v[k]) < 1e-12);
}

TEST_CASE("gate scales each channel by its scalar activation") {
  std::mt19937_64 rng(9);
  Tensor<double> x(2, 5, 3);
  fill_random(x, rng);
  Tensor<double> y(2, 5, 3);
  kernels::gate(x, true, y);
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 3; ++c) {
      const double s = 1.0 / (1.0 + std::exp(-x.at(i, 0, c)));
      CHECK(y.at(i, 0, c) == doctest::Approx(x.at(i, 0, c) * s).epsilon(1e-14));
      for (int r = 1; r < 5; ++r)
        CHECK(y.at(i, r, c) == doctest::Approx(x.at(i, r, c) * s).epsilon(1e-14));
    }
  kernels::gate(x, false, y);
  for (size_t k = 0; k < x.v.size(); ++k) CHECK(y.v[k] == x.v[k]);
}

TEST_CASE("attention weights form a softmax per destination") {
  AtomicStructure s = path_structure(4);
  Graph g = structures::build_graph(s, 2.5);
  GraphView view = serial_view(g, s.species);
  const int h = 2, e = 3;
  std::mt19937_64 rng(13);
  Tape<double> tape;
  Tensor<double> nodes(view.n_rows, h, e), msg(view.n_edges(), h, e), w(1, 1, e);
  fill_random(nodes, rng);
  fill_random(msg, rng);
  fill_random(w, rng);
  const int nv = tape.create(nodes);
  const int mv = tape.create(msg);
  const int wv = tape.create(w);
  const int out = ops::attention_update(tape, nv, mv, wv, view);
  const auto& o = tape.val(out);

  for (int j = 0; j < view.n_owned; ++j) {
    const auto [b, e_end] = view.dst_ranges[j];
    std::vector<double> alpha;
    double z = 0.0;
    for (int k = b; k < e_end; ++k) {
      double logit = 0.0;
      for (int c = 0; c < e; ++c) logit += w.at(0, 0, c) * msg.at(k, 0, c);
      alpha.push_back(std::exp(logit));
      z += alpha.back();
    }
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < e; ++c) {
        double want = nodes.at(j, r, c);
        for (int k = b; k < e_end; ++k) want += alpha[k - b] / z * msg.at(k, r, c);
        CHECK(o.at(j, r, c) == doctest::Approx(want).epsilon(1e-12));
      }
  }
}

TEST_CASE("operator gradients match finite differences") {
  // One tiny graph exercises every op's backward through the full forward.
  BasisSet basis = sp_basis();
  ModelConfig cfg = small_config();
  AtomicStructure s = make_jittered_lattice(6, 2.2, 0.25, {1, 8}, 21);
  Graph g = structures::build_graph(s, cfg.r_cut);
  REQUIRE(g.n_edges() > 0);

  Network<double> net(cfg, basis);
  net.init_params();
  auto prep = net.prepare(g, s.species);
  BlockMatrix target = toy_hamiltonian(s, basis, g);
  auto tb = net.build_targets(prep.view, target);
  const long n_total = tb.local_count;
  REQUIRE(n_total > 0);

  net.params().zero_grad();
  Tape<double> tape;
  auto fwd = net.build_forward(tape, prep);
  net.record_loss(tape, fwd, tb, n_total);
  tape.backward();

  auto& store = net.params();
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int t = 0; t < 150; ++t) {
    auto& e = store.entry(int(rng() % uint64_t(store.n_entries())));
    const size_t k = rng() % e.count();
    const double save = e.data[k];
    const double h = 1e-6 * std::max(1.0, std::abs(save));
    e.data[k] = save + h;
    const double lp = network_loss(net, prep, tb, n_total);
    e.data[k] = save - h;
    const double lm = network_loss(net, prep, tb, n_total);
    e.data[k] = save;
    const double fd = (lp - lm) / (2.0 * h);
    const double an = e.grad[k];
    const double scale = std::max({1e-3, std::abs(fd), std::abs(an)});
    CHECK(std::abs(fd - an) / scale < 1e-5);
    ++checked;
  }
  CHECK(checked == 150);
}

TEST_CASE("predicted blocks transform covariantly under rotation") {
  BasisSet basis = sp_basis();
  ModelConfig cfg = small_config();
  AtomicStructure s = make_jittered_lattice(6, 2.2, 0.3, {1, 8}, 31);
  Graph g = structures::build_graph(s, cfg.r_cut);

  Network<double> net(cfg, basis);
  net.init_params();

  auto run = [&](const AtomicStructure& st) {
    Graph gg = structures::build_graph(st, cfg.r_cut);
    auto prep = net.prepare(gg, st.species);
    Tape<double> tape;
    auto fwd = net.build_forward(tape, prep);
    BlockMatrix coupled =
        net.assemble_blocks(prep.view, tape.val(fwd.node_out), tape.val(fwd.edge_out));
    return blocks_to_uncoupled(coupled, basis, st.species);
  };

  BlockMatrix base = run(s);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  for (int t = 0; t < 3; ++t) {
    const Eigen::Matrix3d r = harmonics::rotation_z(u(rng)) * harmonics::rotation_y(u(rng)) *
                              harmonics::rotation_x(u(rng));
    BlockMatrix rot = run(rotated(s, r));
    REQUIRE(rot.entries.size() == base.entries.size());
    const auto blocks = harmonics::wigner_blocks(basis.max_shell_l(), r);
    for (const auto& [key, mat] : base.entries) {
      const auto it = rot.entries.find(key);
      REQUIRE(it != rot.entries.end());
      const Eigen::MatrixXd da = orbital_rotation(basis, s.species[key.i], blocks);
      const Eigen::MatrixXd db = orbital_rotation(basis, s.species[key.j], blocks);
      const Eigen::MatrixXd want = da * mat * db.transpose();
      CHECK((it->second - want).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("relabeling atoms relabels the outputs") {
  BasisSet basis = sp_basis();
  ModelConfig cfg = small_config();
  AtomicStructure s = make_jittered_lattice(6, 2.2, 0.3, {1, 8}, 41);

  Network<double> net(cfg, basis);
  net.init_params();

  auto run = [&](const AtomicStructure& st) {
    Graph gg = structures::build_graph(st, cfg.r_cut);
    auto prep = net.prepare(gg, st.species);
    Tape<double> tape;
    auto fwd = net.build_forward(tape, prep);
    return net.assemble_blocks(prep.view, tape.val(fwd.node_out), tape.val(fwd.edge_out));
  };

  const std::vector<int> perm = {3, 0, 5, 1, 4, 2};  // old index -> new index
  AtomicStructure sp = s;
  for (int i = 0; i < 6; ++i) {
    sp.positions[perm[i]] = s.positions[i];
    sp.species[perm[i]] = s.species[i];
  }
  BlockMatrix a = run(s);
  BlockMatrix b = run(sp);
  REQUIRE(a.entries.size() == b.entries.size());
  for (const auto& [key, mat] : a.entries) {
    BlockKey mapped{perm[key.i], perm[key.j], key.image};
    const auto it = b.entries.find(mapped);
    REQUIRE(it != b.entries.end());
    CHECK((it->second - mat).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("same seed reproduces the same outputs") {
  BasisSet basis = sp_basis();
  ModelConfig cfg = small_config();
  AtomicStructure s = make_jittered_lattice(5, 2.2, 0.2, {1, 8}, 51);
  Graph g = structures::build_graph(s, cfg.r_cut);

  Network<double> n1(cfg, basis), n2(cfg, basis);
  n1.init_params();
  n2.init_params();
  CHECK(n1.params().value_hash() == n2.params().value_hash());

  auto prep1 = n1.prepare(g, s.species);
  auto prep2 = n2.prepare(g, s.species);
  Tape<double> t1, t2;
  auto f1 = n1.build_forward(t1, prep1);
  auto f2 = n2.build_forward(t2, prep2);
  CHECK(t1.val(f1.node_out).v == t2.val(f2.node_out).v);
  CHECK(t1.val(f1.edge_out).v == t2.val(f2.edge_out).v);
}

TEST_CASE("influence stays within the receptive field") {
  BasisSet basis = sp_basis();
  ModelConfig cfg = small_config();  // two layers
  AtomicStructure s = path_structure(5);
  s.positions.push_back({100.0, 0.0, 0.0});  // isolated atom passes through
  s.species.push_back(8);
  Graph g = structures::build_graph(s, 2.5);

  Network<double> net(cfg, basis);
  net.init_params();

  auto run = [&](const AtomicStructure& st) {
    auto prep = net.prepare(structures::build_graph(st, 2.5), st.species);
    Tape<double> tape;
    auto fwd = net.build_forward(tape, prep);
    return net.assemble_blocks(prep.view, tape.val(fwd.node_out), tape.val(fwd.edge_out));
  };

  BlockMatrix base = run(s);
  AtomicStructure far = s;
  far.species[4] = 8;  // four hops from atom 0
  BlockMatrix moved = run(far);

  auto same = [&](const BlockKey& k) {
    return (base.entries.at(k) - moved.entries.at(k)).cwiseAbs().maxCoeff() == 0.0;
  };
  CHECK(same({0, 0, {0, 0, 0}}));
  CHECK(same({1, 1, {0, 0, 0}}));
  CHECK(same({0, 1, {0, 0, 0}}));
  CHECK_FALSE(same({3, 3, {0, 0, 0}}));  // two hops away: inside the field

  AtomicStructure near = s;
  near.species[2] = 8;
  BlockMatrix closer = run(near);
  CHECK((base.entries.at({0, 0, {0, 0, 0}}) - closer.entries.at({0, 0, {0, 0, 0}}))
            .cwiseAbs()
            .maxCoeff() > 0.0);
}

TEST_CASE("zero message-passing layers still produce heads") {
  BasisSet basis = sp_basis();
  ModelConfig cfg = small_config();
  cfg.layers = 0;
  AtomicStructure s = make_jittered_lattice(4, 2.2, 0.2, {1, 8}, 61);
  Graph g = structures::build_graph(s, cfg.r_cut);

  Network<double> net(cfg, basis);
  net.init_params();
  auto prep = net.prepare(g, s.species);
  Tape<double> tape;
  auto fwd = net.build_forward(tape, prep);
  const auto& node_out = tape.val(fwd.node_out);
  const auto& lay = net.head_layout();
  // Initial features live only on the l = 0 plane, so every L > 0 head
  // output is exactly zero and the L = 0 ones generally are not.
  double l0_mass = 0.0;
  for (int i = 0; i < node_out.n; ++i)
    for (size_t k = 0; k < lay.keys.size(); ++k)
      for (int r = 0; r < 2 * lay.keys[k].L + 1; ++r) {
        const double v = node_out.at(i, lay.offsets[k] + r, 0);
        if (lay.keys[k].L > 0)
          CHECK(v == 0.0);
        else
          l0_mass += std::abs(v);
      }
  CHECK(l0_mass > 0.0);
}

TEST_CASE("masked loss matches an elementwise evaluation") {
  std::mt19937_64 rng(71);
  Tape<double> tape;
  Tensor<double> pred(3, 4, 1);
  fill_random(pred, rng);
  auto target = std::make_shared<Tensor<double>>(3, 4, 1);
  fill_random(*target, rng);
  auto mask = std::make_shared<std::vector<unsigned char>>(12, 0);
  for (size_t k = 0; k < 12; k += 2) (*mask)[k] = 1;

  const int pv = tape.create(pred);
  auto part = ops::masked_loss(tape, pv, target, mask, 6);
  double sa = 0.0, sq = 0.0;
  for (size_t k = 0; k < 12; k += 2) {
    const double d = pred.v[k] - target->v[k];
    sa += std::abs(d);
    sq += d * d;
  }
  CHECK(part.count == 6);
  CHECK(part.sum_abs == doctest::Approx(sa).epsilon(1e-14));
  CHECK(part.sum_sq == doctest::Approx(sq).epsilon(1e-14));

  tape.backward();
  const auto& g = tape.grad(pv);
  for (size_t k = 0; k < 12; ++k) {
    if (k % 2) {
      CHECK(g.v[k] == 0.0);
    } else {
      const double d = pred.v[k] - target->v[k];
      const double want = ((d > 0 ? 1.0 : -1.0) + 2.0 * d) / 6.0;
      CHECK(g.v[k] == doctest::Approx(want).epsilon(1e-14));
    }
  }
}

TEST_CASE("target encoding inverts block assembly") {
  BasisSet basis = sp_basis();
  ModelConfig cfg = small_config();
  AtomicStructure s = make_jittered_lattice(4, 2.2, 0.2, {1, 8}, 81);
  Graph g = structures::build_graph(s, cfg.r_cut);

  Network<double> net(cfg, basis);
  net.init_params();
  auto prep = net.prepare(g, s.species);
  Tape<double> tape;
  auto fwd = net.build_forward(tape, prep);
  BlockMatrix coupled =
      net.assemble_blocks(prep.view, tape.val(fwd.node_out), tape.val(fwd.edge_out));
  BlockMatrix uncoupled = blocks_to_uncoupled(coupled, basis, s.species);

  auto tb = net.build_targets(prep.view, uncoupled);
  const auto& node_out = tape.val(fwd.node_out);
  const auto& edge_out = tape.val(fwd.edge_out);
  for (size_t k = 0; k < node_out.v.size(); ++k)
    if ((*tb.node_mask)[k])
      CHECK(std::abs(tb.node_target->v[k] - node_out.v[k]) < 1e-12);
  for (size_t k = 0; k < edge_out.v.size(); ++k)
    if ((*tb.edge_mask)[k])
      CHECK(std::abs(tb.edge_target->v[k] - edge_out.v[k]) < 1e-12);
  // every species here has two shells, so exactly the padded tail is masked off
  CHECK(tb.local_count > 0);
}

}  // TEST_SUITE
