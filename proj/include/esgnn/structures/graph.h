// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "esgnn/structures/structure.h"

namespace esgnn::structures {

// Directed edge src -> dst. `shift` counts cell images applied to the
// destination atom, so displacement = r_dst + shift * cell - r_src.
// Every edge has a mirror (dst, src, -shift).
struct Edge {
  int src = 0;
  int dst = 0;
  std::array<int, 3> shift = {0, 0, 0};
  Eigen::Vector3d displacement = Eigen::Vector3d::Zero();
  double distance = 0.0;
};

struct Graph {
  int n_nodes = 0;
  std::vector<Edge> edges;

  int n_edges() const { return static_cast<int>(edges.size()); }

  // Edges are kept sorted by (dst, src, shift), so the incoming edges of a
  // node form one contiguous run. Returns [begin, end) edge indices per node.
  std::vector<std::pair<int, int>> incoming_ranges() const;
  std::vector<int> in_degrees() const;
};

// All ordered pairs within the cutoff, periodic images included, distance
// measured inclusively (== r_cut is kept). Self pairs through images are
// real edges; only (i, i, 0) is excluded.
Graph build_graph(const AtomicStructure& s, double r_cut);

}  // namespace esgnn::structures
