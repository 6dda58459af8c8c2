// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <vector>

#include "esgnn/core/error.h"
#include "esgnn/partition/partition.h"

namespace esgnn::partition {

namespace {

struct Csr {
  std::vector<int> offset;  // n+1
  std::vector<int> nbr;
  std::vector<int> w;  // multiplicity of directed edges between the pair
};

Csr build_csr(const structures::Graph& g) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(g.edges.size());
  for (const auto& e : g.edges)
    if (e.src != e.dst) pairs.emplace_back(e.src, e.dst);
  std::sort(pairs.begin(), pairs.end());
  Csr c;
  c.offset.assign(size_t(g.n_nodes) + 1, 0);
  for (size_t k = 0; k < pairs.size();) {
    size_t j = k;
    while (j < pairs.size() && pairs[j] == pairs[k]) ++j;
    c.nbr.push_back(pairs[k].second);
    c.w.push_back(static_cast<int>(j - k));
    ++c.offset[pairs[k].first + 1];
    k = j;
  }
  std::partial_sum(c.offset.begin(), c.offset.end(), c.offset.begin());
  return c;
}

uint64_t mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Splits `nodes` into np parts rooted at part_base. Each bisection grows one
// side from a far corner of the subgraph, then runs move-and-lock refinement
// passes that keep the best prefix of each pass.
void bisect(const Csr& csr, const std::vector<long>& weight, const std::vector<int>& nodes,
            int np, int part_base, uint64_t seed, std::vector<int>& out) {
  if (np == 1) {
    for (int v : nodes) out[v] = part_base;
    return;
  }
  const int npl = (np + 1) / 2, npr = np / 2;
  const int n = static_cast<int>(nodes.size());
  std::vector<int> local(out.size(), -1);
  for (int i = 0; i < n; ++i) local[nodes[i]] = i;

  long total = 0;
  for (int v : nodes) total += weight[v];
  const long target_left = total * npl / np;
  const long slack = std::max<long>(total / 20,
                                    *std::max_element(weight.begin(), weight.end()));

  auto bfs_order = [&](int start_local) {
    std::vector<int> order;
    std::vector<char> seen(n, 0);
    std::deque<int> q;
    auto push = [&](int v) {
      if (!seen[v]) {
        seen[v] = 1;
        q.push_back(v);
      }
    };
    push(start_local);
    int scan = 0;
    while (static_cast<int>(order.size()) < n) {
      if (q.empty()) {  // disconnected remainder, continue in index order
        while (seen[scan]) ++scan;
        push(scan);
      }
      const int v = q.front();
      q.pop_front();
      order.push_back(v);
      const int gv = nodes[v];
      for (int k = csr.offset[gv]; k < csr.offset[gv + 1]; ++k) {
        const int lu = local[csr.nbr[k]];
        if (lu >= 0) push(lu);
      }
    }
    return order;
  };

  const int start = static_cast<int>(mix(seed) % uint64_t(n));
  const int far = bfs_order(start).back();
  const auto order = bfs_order(far);

  // side 0 = left
  std::vector<char> side(n, 1);
  long left_w = 0;
  int taken = 0;
  for (int v : order) {
    if (taken >= n - 1 || (left_w >= target_left && taken >= 1)) break;
    side[v] = 0;
    left_w += weight[nodes[v]];
    ++taken;
  }

  auto gain_of = [&](int v) {
    long gain = 0;
    const int gv = nodes[v];
    for (int k = csr.offset[gv]; k < csr.offset[gv + 1]; ++k) {
      const int lu = local[csr.nbr[k]];
      if (lu < 0) continue;
      gain += side[lu] != side[v] ? csr.w[k] : -csr.w[k];
    }
    return gain;
  };

  for (int pass = 0; pass < 8; ++pass) {
    std::vector<long> gain(n);
    for (int v = 0; v < n; ++v) gain[v] = gain_of(v);
    std::vector<char> locked(n, 0);
    std::vector<int> moves;
    long running = 0, best = 0;
    int best_len = 0;
    long lw = left_w;
    for (int step = 0; step < n; ++step) {
      int pick = -1;
      for (int v = 0; v < n; ++v) {
        if (locked[v]) continue;
        const long after = side[v] == 0 ? lw - weight[nodes[v]] : lw + weight[nodes[v]];
        if (std::abs(after - target_left) > slack) continue;
        if (pick < 0 || gain[v] > gain[pick]) pick = v;
      }
      if (pick < 0) break;
      running += gain[pick];
      lw += side[pick] == 0 ? -weight[nodes[pick]] : weight[nodes[pick]];
      side[pick] ^= 1;
      locked[pick] = 1;
      moves.push_back(pick);
      const int gp = nodes[pick];
      gain[pick] = -gain[pick];
      for (int k = csr.offset[gp]; k < csr.offset[gp + 1]; ++k) {
        const int lu = local[csr.nbr[k]];
        if (lu < 0 || locked[lu]) continue;
        gain[lu] += side[lu] == side[pick] ? -2L * csr.w[k] : 2L * csr.w[k];
      }
      if (running > best) {
        best = running;
        best_len = static_cast<int>(moves.size());
      }
    }
    for (int k = static_cast<int>(moves.size()) - 1; k >= best_len; --k) {
      const int v = moves[k];
      left_w += side[v] == 0 ? weight[nodes[v]] : -weight[nodes[v]];
      side[v] ^= 1;
    }
    left_w = 0;
    for (int v = 0; v < n; ++v)
      if (side[v] == 0) left_w += weight[nodes[v]];
    if (best <= 0) break;
  }

  std::vector<int> ln, rn;
  for (int v = 0; v < n; ++v) (side[v] == 0 ? ln : rn).push_back(nodes[v]);
  if (static_cast<int>(ln.size()) < npl || static_cast<int>(rn.size()) < npr) {
    // degenerate growth, fall back to an index split leaving room on each side
    const int split = std::clamp(int(long(n) * npl / np), npl, n - npr);
    ln.assign(nodes.begin(), nodes.begin() + split);
    rn.assign(nodes.begin() + split, nodes.end());
  }
  bisect(csr, weight, ln, npl, part_base, mix(seed ^ 0x51ed2701ULL), out);
  bisect(csr, weight, rn, npr, part_base + npl, mix(seed ^ 0xa24baed4ULL), out);
}

}  // namespace

Assignment mincut_partition(const structures::Graph& g, int n_parts, uint64_t seed) {
  if (n_parts < 1) throw UsageError("need at least one part");
  if (n_parts > std::max(1, g.n_nodes)) throw UsageError("more parts than nodes");

  Assignment out;
  out.n_parts = n_parts;
  out.node_to_part.assign(std::max(0, g.n_nodes), 0);
  if (n_parts == 1 || g.n_nodes == 0) return out;

  const Csr csr = build_csr(g);
  std::vector<long> weight(g.n_nodes, 1);
  const auto deg = g.in_degrees();
  for (int v = 0; v < g.n_nodes; ++v) weight[v] = std::max(1, deg[v]);

  std::vector<int> nodes(g.n_nodes);
  std::iota(nodes.begin(), nodes.end(), 0);
  bisect(csr, weight, nodes, n_parts, 0, seed, out.node_to_part);
  return out;
}

}  // namespace esgnn::partition
