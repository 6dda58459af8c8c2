// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "esgnn/model/graph_view.h"
#include "esgnn/partition/partition.h"
#include "esgnn/structures/graph.h"

namespace esgnn::runtime {

// One neighbor rank's share of a halo exchange: which of my owned rows it
// needs, and where its rows land in my halo block. Each exchange is exactly
// one message to and one from every neighbor.
struct NeighborLinks {
  int peer = -1;
  std::vector<int> send_rows;  // owned rows, ascending global id
  int recv_row = 0;            // first halo row this peer fills
  int recv_count = 0;
};

struct CommPlan {
  int rank = 0;
  int world = 1;
  model::GraphView view;  // owned rows first, halo rows grouped by peer rank
  std::vector<NeighborLinks> neighbors;  // ascending peer rank

  int n_neighbors() const { return static_cast<int>(neighbors.size()); }
};

// Builds rank's slice of the graph under the given assignment. Every rank
// sees the full graph and takes the part it owns: owned nodes ascending by
// global id, halo rows for remote sources of owned edges grouped by owning
// rank, and matching send lists so that peers' plans interlock.
CommPlan build_comm_plan(const structures::Graph& g, const std::vector<int>& species,
                         const partition::Assignment& a, int rank);

}  // namespace esgnn::runtime
