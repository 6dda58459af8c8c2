// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>
#include <vector>

#include "esgnn/structures/graph.h"

namespace esgnn::model {

// The slice of a graph one execution stream works on. Rows 0..n_owned-1 are
// the nodes this stream owns (it computes their updates and heads); rows
// n_owned..n_rows-1 hold remote node embeddings filled by halo exchange.
// Every edge's destination is owned, so aggregation never communicates. In
// the serial case all nodes are owned and the two row counts coincide.
struct ViewEdge {
  int src_row = 0, dst_row = 0;
  int src_global = 0, dst_global = 0;
  std::array<int, 3> shift = {0, 0, 0};
  Eigen::Vector3d displacement = Eigen::Vector3d::Zero();
  double distance = 0.0;
};

struct GraphView {
  int n_rows = 0;
  int n_owned = 0;
  std::vector<int> row_species;  // per row
  std::vector<int> row_global;   // global node id per row
  std::vector<ViewEdge> edges;   // sorted by (dst_global, src_global, shift)
  std::vector<std::pair<int, int>> dst_ranges;  // incoming edge range per owned row

  int n_edges() const { return static_cast<int>(edges.size()); }
};

inline GraphView serial_view(const structures::Graph& g, const std::vector<int>& species) {
  GraphView v;
  v.n_rows = v.n_owned = g.n_nodes;
  v.row_species = species;
  v.row_global.resize(g.n_nodes);
  for (int i = 0; i < g.n_nodes; ++i) v.row_global[i] = i;
  v.edges.reserve(g.edges.size());
  for (const auto& e : g.edges) {
    ViewEdge ve;
    ve.src_row = ve.src_global = e.src;
    ve.dst_row = ve.dst_global = e.dst;
    ve.shift = e.shift;
    ve.displacement = e.displacement;
    ve.distance = e.distance;
    v.edges.push_back(ve);
  }
  auto ranges = g.incoming_ranges();
  v.dst_ranges.assign(ranges.begin(), ranges.end());
  return v;
}

}  // namespace esgnn::model
