// SPDX-License-Identifier: Apache-2.0
#include "esgnn/runtime/comm_plan.h"

#include <algorithm>
#include <map>

#include "esgnn/core/error.h"

namespace esgnn::runtime {

CommPlan build_comm_plan(const structures::Graph& g, const std::vector<int>& species,
                         const partition::Assignment& a, int rank) {
  if (static_cast<int>(a.node_to_part.size()) != g.n_nodes)
    throw UsageError("assignment does not cover the graph");
  if (static_cast<int>(species.size()) != g.n_nodes)
    throw UsageError("species list does not cover the graph");
  if (rank < 0 || rank >= a.n_parts) throw UsageError("rank outside the assignment");

  CommPlan plan;
  plan.rank = rank;
  plan.world = a.n_parts;
  model::GraphView& v = plan.view;

  std::vector<int> owned_row(g.n_nodes, -1);
  for (int i = 0; i < g.n_nodes; ++i)
    if (a.node_to_part[i] == rank) {
      owned_row[i] = v.n_owned++;
      v.row_global.push_back(i);
      v.row_species.push_back(species[i]);
    }

  // Halo rows: remote sources of owned edges, grouped by owner then id.
  std::vector<std::pair<int, int>> halo;  // (owner, global id)
  for (const auto& e : g.edges) {
    if (a.node_to_part[e.dst] != rank) continue;
    const int owner = a.node_to_part[e.src];
    if (owner != rank) halo.emplace_back(owner, e.src);
  }
  std::sort(halo.begin(), halo.end());
  halo.erase(std::unique(halo.begin(), halo.end()), halo.end());

  std::vector<int> halo_row(g.n_nodes, -1);
  for (size_t k = 0; k < halo.size(); ++k) {
    const int id = halo[k].second;
    halo_row[id] = v.n_owned + static_cast<int>(k);
    v.row_global.push_back(id);
    v.row_species.push_back(species[id]);
  }
  v.n_rows = v.n_owned + static_cast<int>(halo.size());

  // Edges owned by this rank keep the global (dst, src, shift) order, so
  // incoming runs stay contiguous and ascending per owned row.
  for (const auto& e : g.edges) {
    if (a.node_to_part[e.dst] != rank) continue;
    model::ViewEdge ve;
    ve.src_global = e.src;
    ve.dst_global = e.dst;
    ve.src_row = owned_row[e.src] >= 0 ? owned_row[e.src] : halo_row[e.src];
    ve.dst_row = owned_row[e.dst];
    ve.shift = e.shift;
    ve.displacement = e.displacement;
    ve.distance = e.distance;
    v.edges.push_back(ve);
  }
  v.dst_ranges.assign(size_t(v.n_owned), {0, 0});  // {0, 0} = no incoming edges
  for (int k = 0; k < v.n_edges();) {
    int j = k;
    while (j < v.n_edges() && v.edges[j].dst_row == v.edges[k].dst_row) ++j;
    v.dst_ranges[v.edges[k].dst_row] = {k, j};
    k = j;
  }

  // Send lists: my sources feeding edges other ranks own.
  std::map<int, std::vector<int>> sends;  // peer -> global source ids
  for (const auto& e : g.edges) {
    const int owner = a.node_to_part[e.dst];
    if (owner == rank || a.node_to_part[e.src] != rank) continue;
    sends[owner].push_back(e.src);
  }
  for (auto& [peer, ids] : sends) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  }

  // Neighbors: union of send and receive peers (mirror edges make these the
  // same set, but the plan does not rely on it).
  std::map<int, NeighborLinks> nbrs;
  for (const auto& [peer, ids] : sends) {
    NeighborLinks& nl = nbrs[peer];
    nl.peer = peer;
    for (int id : ids) nl.send_rows.push_back(owned_row[id]);
  }
  int at = v.n_owned;
  for (size_t k = 0; k < halo.size();) {
    size_t j = k;
    while (j < halo.size() && halo[j].first == halo[k].first) ++j;
    NeighborLinks& nl = nbrs[halo[k].first];
    nl.peer = halo[k].first;
    nl.recv_row = at;
    nl.recv_count = static_cast<int>(j - k);
    at += nl.recv_count;
    k = j;
  }
  for (auto& [peer, nl] : nbrs) plan.neighbors.push_back(std::move(nl));
  return plan;
}

}  // namespace esgnn::runtime
