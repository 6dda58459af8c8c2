// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "esgnn/structures/graph.h"
#include "esgnn/structures/structure.h"

namespace esgnn::partition {

// Every node belongs to exactly one part; an edge belongs to the part that
// owns its destination node, so incoming messages never cross rank borders.
struct Assignment {
  int n_parts = 1;
  std::vector<int> node_to_part;
};

// Recursive coordinate bisection into 2^depth parts, choosing at each step
// the cut direction that introduces the fewest neighboring parts for the
// given cutoff. Cuts balance the summed node degrees of the two halves.
Assignment lownn_partition(const structures::AtomicStructure& s, const structures::Graph& g,
                           int depth, double r_cut);

// Edge-cut baseline: recursive bisection by greedy region growing plus
// boundary refinement, nodes weighted by degree. Deterministic per seed.
Assignment mincut_partition(const structures::Graph& g, int n_parts, uint64_t seed = 1);

struct PartStats {
  long nodes = 0;
  long edges = 0;          // edges owned, i.e. edges whose destination lives here
  int neighbors = 0;       // distinct parts this one receives embeddings from
  long recv_volume = 0;    // distinct remote source nodes received
};

struct Metrics {
  std::vector<PartStats> parts;
  double node_imbalance = 1.0;  // max over parts / mean
  double edge_imbalance = 1.0;
  double mean_neighbors = 0.0;
  int max_neighbors = 0;
  long total_recv = 0;
  long cut_edges = 0;  // edges whose endpoints live on different parts
};

Metrics compute_metrics(const structures::Graph& g, const Assignment& p);

// One "node_id part_id" line per node.
void write_assignment(std::ostream& out, const Assignment& p);
void write_assignment_file(const std::string& path, const Assignment& p);
Assignment read_assignment(std::istream& in);
Assignment read_assignment_file(const std::string& path);

std::string metrics_json(const Metrics& m);

// Part-to-part communication topology; edge p -> q is weighted by the number
// of node embeddings p packs for q per exchange.
void write_dot(std::ostream& out, const structures::Graph& g, const Assignment& p);

}  // namespace esgnn::partition
