// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "esgnn/core/error.h"
#include "esgnn/harmonics/align.h"
#include "esgnn/harmonics/wigner.h"
#include "esgnn/model/block_matrix.h"
#include "esgnn/model/checkpoint.h"
#include "esgnn/model/optimizer.h"
#include "esgnn/model/synthetic.h"

using namespace esgnn;
using namespace esgnn::model;
using structures::AtomicStructure;
using structures::BasisSet;
using structures::Graph;

namespace {

BasisSet sd_basis() {
  BasisSet b;
  b.add_species(1, {0, 1});
  b.add_species(8, {0, 1, 2});
  return b;
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

}  // namespace

TEST_SUITE("blocks") {

TEST_CASE("jittered lattice stays near its grid sites") {
  auto s = make_jittered_lattice(10, 2.0, 0.1, {1, 8}, 3);
  CHECK(s.positions.size() == 10);
  CHECK(s.species == std::vector<int>{1, 8, 1, 8, 1, 8, 1, 8, 1, 8});
  CHECK(s.pbc == std::array<bool, 3>{true, true, true});
  // 10 atoms need a 3^3 grid, cell edge 6
  CHECK(s.cell.diagonal().isApprox(Eigen::Vector3d::Constant(6.0)));
  for (const auto& p : s.positions)
    for (int d = 0; d < 3; ++d) {
      const double f = std::fmod(p[d] - 1.0 + 6.0, 2.0);  // distance past a site center
      CHECK(std::min(f, 2.0 - f) <= 0.1 + 1e-12);
    }
  auto again = make_jittered_lattice(10, 2.0, 0.1, {1, 8}, 3);
  auto other = make_jittered_lattice(10, 2.0, 0.1, {1, 8}, 4);
  double same_seed = 0.0, new_seed = 0.0;
  for (size_t i = 0; i < s.positions.size(); ++i) {
    same_seed = std::max(same_seed, (again.positions[i] - s.positions[i]).cwiseAbs().maxCoeff());
    new_seed = std::max(new_seed, (other.positions[i] - s.positions[i]).cwiseAbs().maxCoeff());
  }
  CHECK(same_seed == 0.0);
  CHECK(new_seed > 0.0);
}

TEST_CASE("toy pair matrix is globally symmetric") {
  BasisSet basis = sd_basis();
  auto s = make_jittered_lattice(8, 2.1, 0.3, {1, 8}, 5);
  Graph g = structures::build_graph(s, 3.3);
  BlockMatrix bm = toy_hamiltonian(s, basis, g);
  CHECK(bm.entries.size() == size_t(g.n_edges() + 8));
  for (const auto& [key, mat] : bm.entries) {
    BlockKey mirror{key.j, key.i, {-key.image[0], -key.image[1], -key.image[2]}};
    const auto it = bm.entries.find(mirror);
    REQUIRE(it != bm.entries.end());
    CHECK((it->second - mat.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(mat.rows() == basis.n_orbitals(s.species[key.i]));
    CHECK(mat.cols() == basis.n_orbitals(s.species[key.j]));
  }
}

TEST_CASE("toy pair matrix rotates with the structure") {
  BasisSet basis = sd_basis();
  auto s = make_jittered_lattice(6, 2.1, 0.3, {1, 8}, 7);
  Graph g = structures::build_graph(s, 3.3);
  BlockMatrix bm = toy_hamiltonian(s, basis, g);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  const Eigen::Matrix3d r = harmonics::rotation_z(u(rng)) * harmonics::rotation_y(u(rng)) *
                            harmonics::rotation_x(u(rng));
  AtomicStructure s2 = s;
  for (auto& p : s2.positions) p = r * p;
  s2.cell = s.cell * r.transpose();
  Graph g2 = structures::build_graph(s2, 3.3);
  BlockMatrix bm2 = toy_hamiltonian(s2, basis, g2);

  const auto blocks = harmonics::wigner_blocks(basis.max_shell_l(), r);
  for (const auto& [key, mat] : bm.entries) {
    const Eigen::MatrixXd da = orbital_rotation(basis, s.species[key.i], blocks);
    const Eigen::MatrixXd db = orbital_rotation(basis, s.species[key.j], blocks);
    CHECK((bm2.entries.at(key) - da * mat * db.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("coupled and uncoupled block forms round trip") {
  BasisSet basis = sd_basis();
  auto s = make_jittered_lattice(5, 2.1, 0.3, {1, 8}, 11);
  Graph g = structures::build_graph(s, 3.3);
  BlockMatrix bm = toy_hamiltonian(s, basis, g);
  check_block_shapes(bm, basis, s.species);

  BlockMatrix coupled = blocks_to_coupled(bm, basis, s.species);
  for (const auto& [key, mat] : coupled.entries) {
    CHECK(mat.rows() == bm.entries.at(key).rows());
    CHECK(mat.cols() == bm.entries.at(key).cols());
  }
  BlockMatrix back = blocks_to_uncoupled(coupled, basis, s.species);
  for (const auto& [key, mat] : bm.entries)
    CHECK((back.entries.at(key) - mat).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("onsite symmetrization averages the diagonal blocks") {
  BasisSet basis = sd_basis();
  auto s = make_jittered_lattice(4, 2.1, 0.3, {1, 8}, 13);
  Graph g = structures::build_graph(s, 3.3);
  BlockMatrix bm = toy_hamiltonian(s, basis, g);
  // skew one on-site block, then ask the inverse transform to restore symmetry
  BlockKey on{0, 0, {0, 0, 0}};
  bm.entries.at(on)(0, 1) += 0.5;
  BlockMatrix coupled = blocks_to_coupled(bm, basis, s.species);
  BlockMatrix sym = blocks_to_uncoupled(coupled, basis, s.species, true);
  const auto& m = sym.entries.at(on);
  CHECK((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  BlockMatrix raw = blocks_to_uncoupled(coupled, basis, s.species, false);
  CHECK((raw.entries.at(on) - bm.entries.at(on)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("block files round trip exactly") {
  BasisSet basis = sd_basis();
  auto s = make_jittered_lattice(4, 2.1, 0.3, {1, 8}, 17);
  Graph g = structures::build_graph(s, 3.3);
  BlockMatrix bm = toy_hamiltonian(s, basis, g);

  std::stringstream ss;
  write_blocks(ss, bm);
  BlockMatrix back = read_blocks(ss);
  REQUIRE(back.entries.size() == bm.entries.size());
  for (const auto& [key, mat] : bm.entries) {
    const auto it = back.entries.find(key);
    REQUIRE(it != back.entries.end());
    REQUIRE(it->second.rows() == mat.rows());
    REQUIRE(it->second.cols() == mat.cols());
    CHECK((it->second - mat).cwiseAbs().maxCoeff() == 0.0);  // 17 digits round trip exactly
  }
  std::stringstream bad("0 1 0 0 0 2 2 1.0 2.0 3.0");
  CHECK_THROWS_AS(read_blocks(bad), DataError);
}

TEST_CASE("checkpoints restore parameters bit for bit") {
  ParamStore<double> a;
  a.add("w/one", 3, 4, 4);
  a.add("w/two", 1, 5, 5);
  a.init(23);
  const std::string path = "/tmp/esgnn_test_ckpt.bin";
  save_checkpoint(path, a, "lr=0.01\nseed=23\n");

  ParamStore<double> b;
  b.add("w/one", 3, 4, 4);
  b.add("w/two", 1, 5, 5);
  b.init(99);
  CHECK(b.value_hash() != a.value_hash());
  const std::string cfg = load_checkpoint(path, b);
  CHECK(cfg == "lr=0.01\nseed=23\n");
  CHECK(b.value_hash() == a.value_hash());

  ParamStore<double> wrong_shape;
  wrong_shape.add("w/one", 3, 4, 4);
  wrong_shape.add("w/two", 2, 5, 5);
  CHECK_THROWS_AS(load_checkpoint(path, wrong_shape), DataError);
  ParamStore<double> wrong_name;
  wrong_name.add("w/one", 3, 4, 4);
  wrong_name.add("w/other", 1, 5, 5);
  CHECK_THROWS_AS(load_checkpoint(path, wrong_name), DataError);
  ParamStore<float> wrong_precision;
  wrong_precision.add("w/one", 3, 4, 4);
  wrong_precision.add("w/two", 1, 5, 5);
  CHECK_THROWS_AS(load_checkpoint(path, wrong_precision), DataError);
  std::remove(path.c_str());
}

TEST_CASE("optimizer descends a quadratic and halves on plateau") {
  ParamStore<double> store;
  auto& e = store.add("x", 1, 4, 4);
  for (size_t k = 0; k < 4; ++k) e.data[k] = 2.0 + 0.5 * double(k);

  OptimizerConfig cfg;
  cfg.lr = 0.05;
  cfg.patience = 10;
  cfg.factor = 0.5;
  Optimizer<double> opt(store, cfg);

  auto loss = [&]() {
    double l = 0.0;
    for (size_t k = 0; k < 4; ++k) l += e.data[k] * e.data[k];
    return l;
  };
  const double l0 = loss();
  for (int it = 0; it < 400; ++it) {
    store.zero_grad();
    for (size_t k = 0; k < 4; ++k) e.grad[k] = 2.0 * e.data[k];
    opt.step(loss());
  }
  CHECK(loss() < 1e-4 * l0);
  CHECK(opt.steps() == 400);
  CHECK(opt.lr() >= cfg.min_lr);

  // constant loss: every `patience` steps the rate halves until the floor
  ParamStore<double> flat_store;
  flat_store.add("x", 1, 1, 1);
  Optimizer<double> flat(flat_store, cfg);
  for (int it = 0; it < 2 * cfg.patience + 2; ++it) {
    flat_store.zero_grad();
    flat.step(1.0);
  }
  CHECK(flat.lr() == doctest::Approx(0.25 * cfg.lr).epsilon(1e-12));
}

}  // TEST_SUITE
