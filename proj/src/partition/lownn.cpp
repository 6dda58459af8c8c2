// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "esgnn/core/error.h"
#include "esgnn/partition/partition.h"

namespace esgnn::partition {

namespace {

struct BisectContext {
  const structures::AtomicStructure* s = nullptr;
  std::vector<long> weight;  // per node, degree based
  double r_cut = 0.0;
  std::vector<int>* out = nullptr;
  int next_part = 0;
};

std::array<double, 3> box_extents(const BisectContext& ctx, const std::vector<int>& idx,
                                  bool root) {
  std::array<double, 3> ext{};
  for (int d = 0; d < 3; ++d) {
    if (root && ctx.s->pbc[d]) {
      // span of the periodic cell along this axis
      double span = 0.0;
      for (int j = 0; j < 3; ++j) span += std::abs(ctx.s->cell(j, d));
      ext[d] = span;
    } else {
      double lo = std::numeric_limits<double>::max(), hi = -lo;
      for (int i : idx) {
        lo = std::min(lo, ctx.s->positions[i][d]);
        hi = std::max(hi, ctx.s->positions[i][d]);
      }
      ext[d] = idx.empty() ? 0.0 : hi - lo;
    }
  }
  return ext;
}

// Picks the dimension whose bisection adds the fewest neighbor parts: any
// still-uncut direction first, then the smallest estimated neighbor count
// 2 r_cut / extent (one single cut across a periodic direction always gives
// exactly one neighbor). Ties go to the highest dimension index.
int pick_dimension(const BisectContext& ctx, const std::vector<int>& idx,
                   const std::array<int, 3>& cuts, bool root) {
  for (int d = 0; d < 3; ++d)
    if (cuts[d] == 0) return d;
  const auto ext = box_extents(ctx, idx, root);
  std::array<long, 3> nn{};
  for (int d = 0; d < 3; ++d) {
    if (cuts[d] == 1 && ctx.s->pbc[d])
      nn[d] = 1;
    else if (ext[d] <= 0.0)
      nn[d] = std::numeric_limits<long>::max() / 4;
    else
      nn[d] = static_cast<long>(std::ceil(2.0 * ctx.r_cut / ext[d]));
  }
  int dim = 0;
  for (int d = 1; d < 3; ++d)
    if (nn[d] <= nn[dim]) dim = d;
  return dim;
}

void bisect(BisectContext& ctx, std::vector<int> idx, std::array<int, 3> cuts, int level,
            bool root) {
  if (level == 0) {
    for (int i : idx) (*ctx.out)[i] = ctx.next_part;
    ++ctx.next_part;
    return;
  }
  const int dim = pick_dimension(ctx, idx, cuts, root);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double pa = ctx.s->positions[a][dim], pb = ctx.s->positions[b][dim];
    if (pa != pb) return pa < pb;
    return a < b;
  });

  const int n = static_cast<int>(idx.size());
  const int need = 1 << (level - 1);  // each half must still reach its leaves
  long total = 0;
  for (int i : idx) total += ctx.weight[i];
  long prefix = 0, best_diff = std::numeric_limits<long>::max();
  int split = need;
  for (int p = 1; p <= n - 1; ++p) {
    prefix += ctx.weight[idx[p - 1]];
    if (p < need || p > n - need) continue;
    const long diff = std::abs(2 * prefix - total);
    if (diff < best_diff) {
      best_diff = diff;
      split = p;
    }
  }

  ++cuts[dim];
  bisect(ctx, std::vector<int>(idx.begin(), idx.begin() + split), cuts, level - 1, false);
  bisect(ctx, std::vector<int>(idx.begin() + split, idx.end()), cuts, level - 1, false);
}

}  // namespace

Assignment lownn_partition(const structures::AtomicStructure& s, const structures::Graph& g,
                           int depth, double r_cut) {
  if (depth < 0) throw UsageError("partition depth must be non-negative");
  if (g.n_nodes != s.n_atoms()) throw UsageError("graph and structure atom counts differ");
  if (depth >= 31 || (1 << depth) > g.n_nodes)
    throw UsageError("partition depth " + std::to_string(depth) + " needs at least " +
                     std::to_string(depth < 31 ? (1L << depth) : 0L) + " atoms, have " +
                     std::to_string(g.n_nodes));
  if (r_cut <= 0.0) throw UsageError("cutoff must be positive");

  Assignment out;
  out.n_parts = 1 << depth;
  out.node_to_part.assign(g.n_nodes, 0);
  if (depth == 0) return out;

  BisectContext ctx;
  ctx.s = &s;
  ctx.r_cut = r_cut;
  ctx.out = &out.node_to_part;
  const auto deg = g.in_degrees();
  ctx.weight.assign(deg.begin(), deg.end());
  if (std::all_of(ctx.weight.begin(), ctx.weight.end(), [](long w) { return w == 0; }))
    ctx.weight.assign(size_t(g.n_nodes), 1);

  std::vector<int> idx(g.n_nodes);
  std::iota(idx.begin(), idx.end(), 0);
  bisect(ctx, std::move(idx), {0, 0, 0}, depth, true);
  return out;
}

}  // namespace esgnn::partition
