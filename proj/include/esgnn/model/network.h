// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "esgnn/core/elements.h"
#include "esgnn/core/error.h"
#include "esgnn/harmonics/clebsch_gordan.h"
#include "esgnn/model/block_matrix.h"
#include "esgnn/model/graph_view.h"
#include "esgnn/model/ops.h"

namespace esgnn::model {

struct ModelConfig {
  int l_max = 2;
  int e_width = 8;   // E
  int layers = 2;    // M
  int n_radial = 32; // Gaussian count
  double r_cut = 4.0;
  uint64_t seed = 1;
  bool gate_enabled = true;
  bool symmetrize_onsite = false;

  void validate() const {
    if (l_max < 0 || l_max > 6) throw UsageError("l_max must be in 0..6");
    if (e_width < 1) throw UsageError("embedding width must be >= 1");
    if (layers < 0) throw UsageError("layer count must be >= 0");
    if (n_radial < 2) throw UsageError("radial basis needs at least 2 Gaussians");
    if (r_cut <= 0) throw UsageError("cutoff must be positive");
  }
};

// Gaussian radial features: centers uniform on [0, r_cut], width equal to
// the center spacing.
template <typename T>
Tensor<T> radial_features(const GraphView& view, int n_g, double r_cut) {
  Tensor<T> out(view.n_edges(), 1, n_g);
  const double spacing = r_cut / (n_g - 1);
  for (int e = 0; e < view.n_edges(); ++e)
    for (int g = 0; g < n_g; ++g) {
      const double d = view.edges[e].distance - g * spacing;
      out.at(e, 0, g) = static_cast<T>(std::exp(-d * d / (2.0 * spacing * spacing)));
    }
  return out;
}

// Everything about one graph that stays fixed across training steps.
template <typename T>
struct Prepared {
  GraphView view;
  std::shared_ptr<kernels::EdgeRotations<T>> rot;
  std::shared_ptr<Tensor<T>> rbf;
};

struct ForwardVars {
  int node_features = -1;  // (n_rows, H, E)
  int edge_features = -1;  // (n_edges, H, E)
  int node_out = -1;       // (n_owned, head_len, 1)
  int edge_out = -1;       // (n_edges, head_len, 1)
};

// Loss-side view of a target block matrix: padded head-layout buffers plus
// an activity mask (absent blocks and out-of-range L segments are masked).
template <typename T>
struct TargetBuffers {
  std::shared_ptr<Tensor<T>> node_target, edge_target;
  std::shared_ptr<std::vector<unsigned char>> node_mask, edge_mask;
  long local_count = 0;
};

template <typename T>
class Network {
public:
  Network(ModelConfig cfg, structures::BasisSet basis)
      : cfg_(cfg), basis_(std::move(basis)), heads_(HeadLayout::build(basis_)) {
    cfg_.validate();
    if (cfg_.l_max < heads_.max_l_required)
      throw UsageError("l_max " + std::to_string(cfg_.l_max) +
                       " cannot couple the basis shells; need at least " +
                       std::to_string(heads_.max_l_required));
    for (const auto& [z, shells] : basis_.all()) species_.push_back(z);
    register_params();
  }

  const ModelConfig& config() const { return cfg_; }
  const structures::BasisSet& basis() const { return basis_; }
  const HeadLayout& head_layout() const { return heads_; }
  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }

  void init_params() { store_.init(cfg_.seed); }

  Prepared<T> prepare(GraphView view) const {
    Prepared<T> p;
    p.rot = std::make_shared<kernels::EdgeRotations<T>>(
        kernels::build_edge_rotations<T>(view, cfg_.l_max));
    p.rbf = std::make_shared<Tensor<T>>(radial_features<T>(view, cfg_.n_radial, cfg_.r_cut));
    p.view = std::move(view);
    return p;
  }

  Prepared<T> prepare(const structures::Graph& g, const std::vector<int>& species) const {
    return prepare(serial_view(g, species));
  }

  // Builds the recorded forward pass. exchange(tape, node_var) runs before
  // each message-creation step (a halo refresh in distributed runs, a no-op
  // serially).
  using ExchangeHook = std::function<void(Tape<T>&, int)>;
  ForwardVars build_forward(Tape<T>& tape, const Prepared<T>& prep,
                               const ExchangeHook& exchange = {}) {
    const GraphView& view = prep.view;
    const auto& lay = MMajorLayout::get(cfg_.l_max);
    const int h = lay.h, e = cfg_.e_width;

    std::vector<int> species_index(view.n_rows);
    for (int i = 0; i < view.n_rows; ++i)
      species_index[i] = species_slot(view.row_species[i]);

    std::vector<int> embed_vars;
    for (int s : species_)
      embed_vars.push_back(tape.adopt(store_.at("embed/" + element_symbol(s))));
    const int lift_var = tape.adopt(store_.at("radial/lift"));

    int node = ops::embed_nodes(tape, species_index, embed_vars, h, e);
    int edge = ops::lift_radial(tape, prep.rbf, lift_var, h);

    for (int layer = 0; layer < cfg_.layers; ++layer) {
      for (const bool node_block : {true, false}) {
        if (exchange) exchange(tape, node);
        const std::string base =
            "layer" + std::to_string(layer) + (node_block ? "/node" : "/edge");
        const int msg3 = ops::concat_message(tape, node, edge, view);
        const int aligned = ops::rotate(tape, msg3, prep.rot, false);
        const int mmaj = ops::permute(tape, aligned, lay.to_m);
        const int hid = ops::so2_linear(tape, mmaj, adopt_so2(tape, base + "/lin1"), lay,
                                        3 * e, 2 * e);
        const int gated = ops::gate(tape, hid, cfg_.gate_enabled);
        const int narrow =
            ops::so2_linear(tape, gated, adopt_so2(tape, base + "/lin2"), lay, 2 * e, e);
        const int lmaj = ops::permute(tape, narrow, lay.to_l);
        const int msg = ops::rotate(tape, lmaj, prep.rot, true);
        if (node_block) {
          const int att = tape.adopt(store_.at("layer" + std::to_string(layer) + "/att"));
          node = ops::attention_update(tape, node, msg, att, view);
        } else {
          edge = ops::add(tape, edge, msg);
        }
      }
    }

    ForwardVars out;
    out.node_features = node;
    out.edge_features = edge;
    out.node_out = ops::heads(tape, node, adopt_heads(tape, "head/node/"), heads_, view.n_owned);
    out.edge_out =
        ops::heads(tape, edge, adopt_heads(tape, "head/edge/"), heads_, view.n_edges());
    return out;
  }

  // Coupled block matrix from head outputs: on-site blocks from nodes, pair
  // blocks from edges, padded slots truncated to each species pair's shells.
  BlockMatrix assemble_blocks(const GraphView& view, const Tensor<T>& node_out,
                              const Tensor<T>& edge_out) const {
    BlockMatrix bm;
    bm.mode = BlockBasis::coupled;
    for (int i = 0; i < view.n_owned; ++i) {
      BlockKey key{view.row_global[i], view.row_global[i], {0, 0, 0}};
      bm.entries.emplace(key,
                         fill_block(view.row_species[i], view.row_species[i], node_out.row(i)));
    }
    for (int k = 0; k < view.n_edges(); ++k) {
      const auto& ed = view.edges[k];
      BlockKey key{ed.src_global, ed.dst_global, ed.shift};
      bm.entries.emplace(key, fill_block(view.row_species[ed.src_row],
                                         view.row_species[ed.dst_row], edge_out.row(k)));
    }
    return bm;
  }

  // Padded target buffers for the masked loss, from an uncoupled target.
  TargetBuffers<T> build_targets(const GraphView& view, const BlockMatrix& target) const {
    if (target.mode != BlockBasis::uncoupled) throw ShapeError("targets must be uncoupled");
    TargetBuffers<T> tb;
    tb.node_target = std::make_shared<Tensor<T>>(view.n_owned, heads_.out_len, 1);
    tb.edge_target = std::make_shared<Tensor<T>>(view.n_edges(), heads_.out_len, 1);
    tb.node_mask =
        std::make_shared<std::vector<unsigned char>>(tb.node_target->size(), 0);
    tb.edge_mask =
        std::make_shared<std::vector<unsigned char>>(tb.edge_target->size(), 0);
    for (int i = 0; i < view.n_owned; ++i) {
      BlockKey key{view.row_global[i], view.row_global[i], {0, 0, 0}};
      auto it = target.entries.find(key);
      if (it == target.entries.end()) continue;
      tb.local_count += encode_target(view.row_species[i], view.row_species[i], it->second,
                                      tb.node_target->row(i),
                                      tb.node_mask->data() + size_t(i) * heads_.out_len);
    }
    for (int k = 0; k < view.n_edges(); ++k) {
      const auto& ed = view.edges[k];
      BlockKey key{ed.src_global, ed.dst_global, ed.shift};
      auto it = target.entries.find(key);
      if (it == target.entries.end()) continue;
      tb.local_count += encode_target(view.row_species[ed.src_row], view.row_species[ed.dst_row],
                                      it->second, tb.edge_target->row(k),
                                      tb.edge_mask->data() + size_t(k) * heads_.out_len);
    }
    return tb;
  }

  // Records the loss on the tape and returns the local partial sums;
  // n_total must already aggregate counts across ranks.
  ops::LossPartials record_loss(Tape<T>& tape, const ForwardVars& fwd,
                                const TargetBuffers<T>& tb, long n_total) const {
    if (n_total <= 0) throw DataError("no target elements overlap the predictions");
    auto a = ops::masked_loss(tape, fwd.node_out, tb.node_target, tb.node_mask, n_total);
    auto b = ops::masked_loss(tape, fwd.edge_out, tb.edge_target, tb.edge_mask, n_total);
    ops::LossPartials out;
    out.sum_abs = a.sum_abs + b.sum_abs;
    out.sum_sq = a.sum_sq + b.sum_sq;
    out.count = a.count + b.count;
    return out;
  }

  int species_slot(int z) const {
    for (size_t i = 0; i < species_.size(); ++i)
      if (species_[i] == z) return static_cast<int>(i);
    throw DataError("species " + element_symbol(z) + " missing from the model's basis");
  }

private:
  ModelConfig cfg_;
  structures::BasisSet basis_;
  HeadLayout heads_;
  std::vector<int> species_;
  ParamStore<T> store_;

  void register_params() {
    const auto& lay = MMajorLayout::get(cfg_.l_max);
    const int e = cfg_.e_width;
    for (int z : species_) store_.add("embed/" + element_symbol(z), 1, e, e);
    store_.add("radial/lift", e, cfg_.n_radial, cfg_.n_radial);
    for (int layer = 0; layer < cfg_.layers; ++layer) {
      for (const char* block : {"node", "edge"}) {
        const std::string base = "layer" + std::to_string(layer) + "/" + block;
        add_so2(base + "/lin1", lay, 3 * e, 2 * e);
        add_so2(base + "/lin2", lay, 2 * e, e);
      }
      store_.add("layer" + std::to_string(layer) + "/att", 1, e, e);
    }
    for (const char* set : {"node", "edge"})
      for (const auto& k : heads_.keys)
        store_.add(std::string("head/") + set + "/" + head_name(k), 1, e, e);
  }

  static std::string head_name(const HeadKey& k) {
    return "s" + std::to_string(k.slot_a) + "s" + std::to_string(k.slot_b) + "L" +
           std::to_string(k.L);
  }

  void add_so2(const std::string& base, const MMajorLayout& lay, int cin, int cout) {
    {
      const int nd = lay.n_degrees(0);
      store_.add(base + "/m0", nd * cout, nd * cin, nd * cin);
    }
    for (int m = 1; m <= lay.l_max; ++m) {
      const int nd = lay.n_degrees(m);
      store_.add(base + "/m" + std::to_string(m) + "r", nd * cout, nd * cin, nd * cin);
      store_.add(base + "/m" + std::to_string(m) + "i", nd * cout, nd * cin, nd * cin);
    }
  }

  ops::So2ParamVars adopt_so2(Tape<T>& tape, const std::string& base) {
    ops::So2ParamVars v;
    v.m0 = tape.adopt(store_.at(base + "/m0"));
    for (int m = 1; m <= cfg_.l_max; ++m) {
      v.wr.push_back(tape.adopt(store_.at(base + "/m" + std::to_string(m) + "r")));
      v.wi.push_back(tape.adopt(store_.at(base + "/m" + std::to_string(m) + "i")));
    }
    return v;
  }

  std::vector<int> adopt_heads(Tape<T>& tape, const std::string& prefix) {
    std::vector<int> vars;
    for (const auto& k : heads_.keys)
      vars.push_back(tape.adopt(store_.at(prefix + head_name(k))));
    return vars;
  }

  // One atom-pair block from a padded head-output row.
  Eigen::MatrixXd fill_block(int za, int zb, const T* row) const {
    const auto& sha = basis_.shells(za);
    const auto& shb = basis_.shells(zb);
    Eigen::MatrixXd block =
        Eigen::MatrixXd::Zero(basis_.n_orbitals(za), basis_.n_orbitals(zb));
    for (size_t a = 0; a < sha.size(); ++a)
      for (size_t b = 0; b < shb.size(); ++b) {
        const int la = sha[a], lb = shb[b];
        const int oa = basis_.orbital_offset(za, static_cast<int>(a));
        const int ob = basis_.orbital_offset(zb, static_cast<int>(b));
        const int db = 2 * lb + 1;
        int pos = 0;
        for (int L = std::abs(la - lb); L <= la + lb; ++L) {
          const int off = heads_.segment(static_cast<int>(a), static_cast<int>(b), L);
          for (int r = 0; r < 2 * L + 1; ++r, ++pos)
            block(oa + pos / db, ob + pos % db) = double(row[off + r]);
        }
      }
    return block;
  }

  // Inverse of fill_block for targets; returns the number of active elements.
  long encode_target(int za, int zb, const Eigen::MatrixXd& block, T* row,
                     unsigned char* mask) const {
    const auto& sha = basis_.shells(za);
    const auto& shb = basis_.shells(zb);
    long active = 0;
    for (size_t a = 0; a < sha.size(); ++a)
      for (size_t b = 0; b < shb.size(); ++b) {
        const int la = sha[a], lb = shb[b];
        const int oa = basis_.orbital_offset(za, static_cast<int>(a));
        const int ob = basis_.orbital_offset(zb, static_cast<int>(b));
        const int da = 2 * la + 1, db = 2 * lb + 1;
        const Eigen::VectorXd coupled =
            harmonics::to_coupled(la, lb, block.block(oa, ob, da, db));
        int pos = 0;
        for (int L = std::abs(la - lb); L <= la + lb; ++L) {
          const int off = heads_.segment(static_cast<int>(a), static_cast<int>(b), L);
          for (int r = 0; r < 2 * L + 1; ++r, ++pos) {
            row[off + r] = static_cast<T>(coupled[pos]);
            mask[off + r] = 1;
            ++active;
          }
        }
      }
    return active;
  }
};

}  // namespace esgnn::model
