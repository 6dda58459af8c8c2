// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "esgnn/model/graph_view.h"
#include "esgnn/model/kernels.h"
#include "esgnn/model/layout.h"
#include "esgnn/model/tape.h"

namespace esgnn::model::ops {

// Node embedding table lookup: the l = 0 plane of every row gets the
// embedding of its species; higher planes start at zero.
template <typename T>
int embed_nodes(Tape<T>& tape, const std::vector<int>& species_index_of_row,
                const std::vector<int>& embed_vars, int h, int e_width) {
  const int n = static_cast<int>(species_index_of_row.size());
  Tensor<T> out(n, h, e_width);
  for (int i = 0; i < n; ++i) {
    const auto& emb = tape.val(embed_vars[species_index_of_row[i]]);
    for (int c = 0; c < e_width; ++c) out.at(i, 0, c) = emb.v[c];
  }
  const int id = tape.create(std::move(out));
  tape.record([species_index_of_row, embed_vars, id, e_width](Tape<T>& t) {
    const auto& g = t.grad(id);
    for (int i = 0; i < g.n; ++i) {
      auto& eg = t.grad(embed_vars[species_index_of_row[i]]);
      for (int c = 0; c < e_width; ++c) eg.v[c] += g.at(i, 0, c);
    }
  });
  return id;
}

// Edge init: radial features (n_edges, n_g) lifted to E channels on the
// l = 0 plane, y[e, 0, c] = sum_g W[c, g] rbf[e, g].
template <typename T>
int lift_radial(Tape<T>& tape, const std::shared_ptr<Tensor<T>>& rbf, int lift_var, int h) {
  const auto& w = tape.val(lift_var);  // (1, E, n_g)
  const int n = rbf->n, ng = rbf->c, e_width = w.h;
  Tensor<T> out(n, h, e_width);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < e_width; ++c) {
      T acc = 0;
      for (int g = 0; g < ng; ++g) acc += w.at(0, c, g) * rbf->at(i, 0, g);
      out.at(i, 0, c) = acc;
    }
  const int id = tape.create(std::move(out));
  tape.record([rbf, lift_var, id, e_width, ng](Tape<T>& t) {
    const auto& g = t.grad(id);
    auto& wg = t.grad(lift_var);
    for (int i = 0; i < g.n; ++i)
      for (int c = 0; c < e_width; ++c) {
        const T up = g.at(i, 0, c);
        if (up == T(0)) continue;
        for (int k = 0; k < ng; ++k) wg.at(0, c, k) += up * rbf->at(i, 0, k);
      }
  });
  return id;
}

// Message assembly: per edge the channel-concatenation of source node,
// destination node, and edge embeddings (the index-gather form of the
// sparse-adjacency product).
template <typename T>
int concat_message(Tape<T>& tape, int node_var, int edge_var, const GraphView& view) {
  const auto& nodes = tape.val(node_var);
  const auto& edges = tape.val(edge_var);
  const int h = nodes.h, e_width = nodes.c;
  Tensor<T> out(view.n_edges(), h, 3 * e_width);
  for (int k = 0; k < view.n_edges(); ++k) {
    const T* src = nodes.row(view.edges[k].src_row);
    const T* dst = nodes.row(view.edges[k].dst_row);
    const T* edg = edges.row(k);
    T* o = out.row(k);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < e_width; ++c) {
        o[(size_t(r) * 3 + 0) * e_width + c] = src[size_t(r) * e_width + c];
        o[(size_t(r) * 3 + 1) * e_width + c] = dst[size_t(r) * e_width + c];
        o[(size_t(r) * 3 + 2) * e_width + c] = edg[size_t(r) * e_width + c];
      }
  }
  const int id = tape.create(std::move(out));
  const GraphView* vp = &view;
  tape.record([node_var, edge_var, id, vp, h, e_width](Tape<T>& t) {
    const auto& g = t.grad(id);
    auto& ng = t.grad(node_var);
    auto& eg = t.grad(edge_var);
    for (int k = 0; k < vp->n_edges(); ++k) {
      T* src = ng.row(vp->edges[k].src_row);
      T* dst = ng.row(vp->edges[k].dst_row);
      T* edg = eg.row(k);
      const T* o = g.row(k);
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < e_width; ++c) {
          src[size_t(r) * e_width + c] += o[(size_t(r) * 3 + 0) * e_width + c];
          dst[size_t(r) * e_width + c] += o[(size_t(r) * 3 + 1) * e_width + c];
          edg[size_t(r) * e_width + c] += o[(size_t(r) * 3 + 2) * e_width + c];
        }
    }
  });
  return id;
}

template <typename T>
int rotate(Tape<T>& tape, int x_var, const std::shared_ptr<kernels::EdgeRotations<T>>& rot,
           bool transpose) {
  const auto& x = tape.val(x_var);
  Tensor<T> out(x.n, x.h, x.c);
  kernels::rotate(x, *rot, transpose, out);
  const int id = tape.create(std::move(out));
  tape.record([x_var, id, rot, transpose](Tape<T>& t) {
    kernels::rotate(t.grad(id), *rot, !transpose, t.grad(x_var), true);
  });
  return id;
}

// perm maps source row -> destination row within each item.
template <typename T>
int permute(Tape<T>& tape, int x_var, const std::vector<int>& perm) {
  const auto& x = tape.val(x_var);
  Tensor<T> out(x.n, x.h, x.c);
  kernels::permute_components(x, perm, out);
  std::vector<int> inv(perm.size());
  for (size_t r = 0; r < perm.size(); ++r) inv[perm[r]] = static_cast<int>(r);
  const int id = tape.create(std::move(out));
  tape.record([x_var, id, inv](Tape<T>& t) {
    kernels::permute_components(t.grad(id), inv, t.grad(x_var), true);
  });
  return id;
}

struct So2ParamVars {
  int m0 = -1;
  std::vector<int> wr, wi;
};

template <typename T>
int so2_linear(Tape<T>& tape, int x_var, const So2ParamVars& w, const MMajorLayout& lay,
               int cin, int cout) {
  kernels::So2Weights<T> wv;
  wv.l_max = lay.l_max;
  wv.cin = cin;
  wv.cout = cout;
  wv.m0 = tape.val(w.m0).v.data();
  for (int m = 1; m <= lay.l_max; ++m) {
    wv.wr.push_back(tape.val(w.wr[m - 1]).v.data());
    wv.wi.push_back(tape.val(w.wi[m - 1]).v.data());
  }
  const auto& x = tape.val(x_var);
  Tensor<T> out(x.n, x.h, cout);
  kernels::so2_linear(x, wv, lay, out);
  const int id = tape.create(std::move(out));
  const MMajorLayout* lp = &lay;
  tape.record([x_var, id, w, lp, cin, cout](Tape<T>& t) {
    kernels::So2Weights<T> wv;
    wv.l_max = lp->l_max;
    wv.cin = cin;
    wv.cout = cout;
    wv.m0 = t.val(w.m0).v.data();
    kernels::So2Grads<T> gv;
    gv.m0 = t.grad(w.m0).v.data();
    for (int m = 1; m <= lp->l_max; ++m) {
      wv.wr.push_back(t.val(w.wr[m - 1]).v.data());
      wv.wi.push_back(t.val(w.wi[m - 1]).v.data());
      gv.wr.push_back(t.grad(w.wr[m - 1]).v.data());
      gv.wi.push_back(t.grad(w.wi[m - 1]).v.data());
    }
    kernels::so2_linear_backward(t.val(x_var), wv, *lp, t.grad(id), t.grad(x_var), gv);
  });
  return id;
}

template <typename T>
int gate(Tape<T>& tape, int x_var, bool enabled) {
  const auto& x = tape.val(x_var);
  Tensor<T> out(x.n, x.h, x.c);
  kernels::gate(x, enabled, out);
  const int id = tape.create(std::move(out));
  tape.record([x_var, id, enabled](Tape<T>& t) {
    kernels::gate_backward(t.val(x_var), enabled, t.grad(id), t.grad(x_var));
  });
  return id;
}

// Attention aggregation + residual node update. Logits come from the l = 0
// channels of each transformed message; softmax runs per destination node
// over its incoming edges; nodes without incoming edges pass through.
template <typename T>
int attention_update(Tape<T>& tape, int node_var, int msg_var, int att_var,
                     const GraphView& view) {
  const auto& nodes = tape.val(node_var);
  const auto& msg = tape.val(msg_var);
  const auto& w = tape.val(att_var);  // (1, 1, E)
  const int h = nodes.h, e_width = nodes.c;
  msg.require(view.n_edges(), h, e_width);

  auto alphas = std::make_shared<std::vector<T>>(view.n_edges(), T(0));
  Tensor<T> out = nodes;
  for (int j = 0; j < view.n_owned; ++j) {
    const auto [b, e] = view.dst_ranges[j];
    if (b == e) continue;
    T mx = -std::numeric_limits<T>::infinity();
    for (int k = b; k < e; ++k) {
      T logit = 0;
      for (int c = 0; c < e_width; ++c) logit += w.v[c] * msg.at(k, 0, c);
      (*alphas)[k] = logit;
      mx = std::max(mx, logit);
    }
    T z = 0;
    for (int k = b; k < e; ++k) {
      (*alphas)[k] = std::exp((*alphas)[k] - mx);
      z += (*alphas)[k];
    }
    T* o = out.row(j);
    for (int k = b; k < e; ++k) {
      (*alphas)[k] /= z;
      const T a = (*alphas)[k];
      const T* m = msg.row(k);
      for (size_t t = 0; t < size_t(h) * e_width; ++t) o[t] += a * m[t];
    }
  }
  const int id = tape.create(std::move(out));
  const GraphView* vp = &view;
  tape.record([node_var, msg_var, att_var, id, vp, alphas, h, e_width](Tape<T>& t) {
    const auto& g = t.grad(id);
    auto& ng = t.grad(node_var);
    auto& mg = t.grad(msg_var);
    auto& wg = t.grad(att_var);
    const auto& msg = t.val(msg_var);
    const auto& w = t.val(att_var);
    for (size_t k = 0; k < g.v.size(); ++k) ng.v[k] += g.v[k];
    for (int j = 0; j < vp->n_owned; ++j) {
      const auto [b, e] = vp->dst_ranges[j];
      if (b == e) continue;
      const T* gj = g.row(j);
      // dot_k = <g_j, msg_k>; dlogit_k = a_k (dot_k - sum_i a_i dot_i)
      T mean = 0;
      std::vector<T> dots(e - b);
      for (int k = b; k < e; ++k) {
        const T* m = msg.row(k);
        T d = 0;
        for (size_t t = 0; t < size_t(h) * e_width; ++t) d += gj[t] * m[t];
        dots[k - b] = d;
        mean += (*alphas)[k] * d;
      }
      for (int k = b; k < e; ++k) {
        const T a = (*alphas)[k];
        T* m = mg.row(k);
        for (size_t t = 0; t < size_t(h) * e_width; ++t) m[t] += a * gj[t];
        const T dl = a * (dots[k - b] - mean);
        for (int c = 0; c < e_width; ++c) {
          m[c] += dl * w.v[c];
          wg.v[c] += dl * msg.at(k, 0, c);
        }
      }
    }
  });
  return id;
}

template <typename T>
int add(Tape<T>& tape, int a_var, int b_var) {
  const auto& a = tape.val(a_var);
  const auto& b = tape.val(b_var);
  b.require(a.n, a.h, a.c);
  Tensor<T> out = a;
  for (size_t k = 0; k < out.v.size(); ++k) out.v[k] += b.v[k];
  const int id = tape.create(std::move(out));
  tape.record([a_var, b_var, id](Tape<T>& t) {
    const auto& g = t.grad(id);
    auto& ga = t.grad(a_var);
    auto& gb = t.grad(b_var);
    for (size_t k = 0; k < g.v.size(); ++k) {
      ga.v[k] += g.v[k];
      gb.v[k] += g.v[k];
    }
  });
  return id;
}

// Output heads: one E -> 1 projection per (slot_a, slot_b, L) key, applied
// to the degree-L plane of the first n_items rows. Output (n_items, out_len, 1).
template <typename T>
int heads(Tape<T>& tape, int x_var, const std::vector<int>& head_vars, const HeadLayout& lay,
          int n_items) {
  const auto& x = tape.val(x_var);
  const int e_width = x.c;
  Tensor<T> out(n_items, lay.out_len, 1);
  for (int i = 0; i < n_items; ++i) {
    const T* xr = x.row(i);
    T* o = out.row(i);
    for (size_t k = 0; k < lay.keys.size(); ++k) {
      const int L = lay.keys[k].L;
      const auto& w = tape.val(head_vars[k]);
      for (int r = 0; r < 2 * L + 1; ++r) {
        T acc = 0;
        const T* plane = xr + size_t(L * L + r) * e_width;
        for (int c = 0; c < e_width; ++c) acc += w.v[c] * plane[c];
        o[lay.offsets[k] + r] = acc;
      }
    }
  }
  const int id = tape.create(std::move(out));
  const HeadLayout* lp = &lay;
  tape.record([x_var, head_vars, id, lp, n_items, e_width](Tape<T>& t) {
    const auto& g = t.grad(id);
    auto& xg = t.grad(x_var);
    const auto& x = t.val(x_var);
    for (int i = 0; i < n_items; ++i) {
      const T* gr = g.row(i);
      T* dxr = xg.row(i);
      const T* xr = x.row(i);
      for (size_t k = 0; k < lp->keys.size(); ++k) {
        const int L = lp->keys[k].L;
        const auto& w = t.val(head_vars[k]);
        auto& wg = t.grad(head_vars[k]);
        for (int r = 0; r < 2 * L + 1; ++r) {
          const T up = gr[lp->offsets[k] + r];
          if (up == T(0)) continue;
          T* dplane = dxr + size_t(L * L + r) * e_width;
          const T* plane = xr + size_t(L * L + r) * e_width;
          for (int c = 0; c < e_width; ++c) {
            dplane[c] += up * w.v[c];
            wg.v[c] += up * plane[c];
          }
        }
      }
    }
  });
  return id;
}

// Masked L1 + L2 partial sums against a target buffer of the same shape.
// The caller combines partials (across ranks if distributed) into
// loss = (sum_abs + sum_sq) / n_total; the recorded backward seeds the
// gradient (sign(d) + 2 d) / n_total directly, so this op is the root.
struct LossPartials {
  double sum_abs = 0.0;
  double sum_sq = 0.0;
  long count = 0;
};

template <typename T>
LossPartials masked_loss(Tape<T>& tape, int pred_var, const std::shared_ptr<Tensor<T>>& target,
                         const std::shared_ptr<std::vector<unsigned char>>& mask, long n_total) {
  const auto& p = tape.val(pred_var);
  p.require(target->n, target->h, target->c);
  LossPartials out;
  for (size_t k = 0; k < p.v.size(); ++k) {
    if (!(*mask)[k]) continue;
    const double d = double(p.v[k]) - double(target->v[k]);
    out.sum_abs += std::abs(d);
    out.sum_sq += d * d;
    ++out.count;
  }
  tape.record([pred_var, target, mask, n_total](Tape<T>& t) {
    auto& g = t.grad(pred_var);
    const auto& p = t.val(pred_var);
    for (size_t k = 0; k < p.v.size(); ++k) {
      if (!(*mask)[k]) continue;
      const double d = double(p.v[k]) - double(target->v[k]);
      const double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
      g.v[k] += static_cast<T>((s + 2.0 * d) / double(n_total));
    }
  });
  return out;
}

}  // namespace esgnn::model::ops
