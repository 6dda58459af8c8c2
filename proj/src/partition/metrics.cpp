// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "esgnn/core/error.h"
#include "esgnn/partition/partition.h"

namespace esgnn::partition {

namespace {

void validate(const structures::Graph& g, const Assignment& p) {
  if (static_cast<int>(p.node_to_part.size()) != g.n_nodes)
    throw UsageError("assignment covers " + std::to_string(p.node_to_part.size()) +
                     " nodes, graph has " + std::to_string(g.n_nodes));
  for (int q : p.node_to_part)
    if (q < 0 || q >= p.n_parts) throw DataError("part id out of range: " + std::to_string(q));
}

double imbalance(const std::vector<long>& counts) {
  long total = 0, top = 0;
  for (long c : counts) {
    total += c;
    top = std::max(top, c);
  }
  if (total == 0) return 1.0;
  return double(top) * double(counts.size()) / double(total);
}

// Distinct (receiving part, source node) pairs across part borders; the
// owning part of each source tags the sender.
std::vector<std::pair<int, int>> cross_pairs(const structures::Graph& g, const Assignment& p) {
  std::vector<std::pair<int, int>> pairs;
  for (const auto& e : g.edges) {
    const int q = p.node_to_part[e.dst];
    if (p.node_to_part[e.src] != q) pairs.emplace_back(q, e.src);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

}  // namespace

Metrics compute_metrics(const structures::Graph& g, const Assignment& p) {
  validate(g, p);
  Metrics m;
  m.parts.resize(p.n_parts);
  for (int q : p.node_to_part) ++m.parts[q].nodes;
  for (const auto& e : g.edges) {
    ++m.parts[p.node_to_part[e.dst]].edges;
    if (p.node_to_part[e.src] != p.node_to_part[e.dst]) ++m.cut_edges;
  }

  const auto pairs = cross_pairs(g, p);
  std::vector<std::pair<int, int>> part_pairs;
  part_pairs.reserve(pairs.size());
  for (const auto& [q, src] : pairs) {
    ++m.parts[q].recv_volume;
    part_pairs.emplace_back(q, p.node_to_part[src]);
    ++m.total_recv;
  }
  std::sort(part_pairs.begin(), part_pairs.end());
  part_pairs.erase(std::unique(part_pairs.begin(), part_pairs.end()), part_pairs.end());
  long nbr_sum = 0;
  for (const auto& [q, src_part] : part_pairs) {
    (void)src_part;
    ++m.parts[q].neighbors;
  }
  for (const auto& s : m.parts) {
    nbr_sum += s.neighbors;
    m.max_neighbors = std::max(m.max_neighbors, s.neighbors);
  }
  m.mean_neighbors = p.n_parts > 0 ? double(nbr_sum) / double(p.n_parts) : 0.0;

  std::vector<long> nc, ec;
  for (const auto& s : m.parts) {
    nc.push_back(s.nodes);
    ec.push_back(s.edges);
  }
  m.node_imbalance = imbalance(nc);
  m.edge_imbalance = imbalance(ec);
  return m;
}

void write_assignment(std::ostream& out, const Assignment& p) {
  for (size_t i = 0; i < p.node_to_part.size(); ++i)
    out << i << ' ' << p.node_to_part[i] << '\n';
}

void write_assignment_file(const std::string& path, const Assignment& p) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_assignment(out, p);
}

Assignment read_assignment(std::istream& in) {
  Assignment p;
  p.n_parts = 0;
  long id = 0, part = 0, expect = 0;
  while (in >> id >> part) {
    if (id != expect) throw DataError("assignment line for node " + std::to_string(expect) +
                                      " found id " + std::to_string(id));
    if (part < 0) throw DataError("negative part id");
    p.node_to_part.push_back(static_cast<int>(part));
    p.n_parts = std::max(p.n_parts, static_cast<int>(part) + 1);
    ++expect;
  }
  if (!in.eof() && in.fail()) throw DataError("malformed assignment file");
  if (p.node_to_part.empty()) throw DataError("empty assignment");
  return p;
}

Assignment read_assignment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  return read_assignment(in);
}

std::string metrics_json(const Metrics& m) {
  nlohmann::json j;
  j["n_parts"] = m.parts.size();
  j["node_imbalance"] = m.node_imbalance;
  j["edge_imbalance"] = m.edge_imbalance;
  j["mean_neighbors"] = m.mean_neighbors;
  j["max_neighbors"] = m.max_neighbors;
  j["total_recv_volume"] = m.total_recv;
  j["cut_edges"] = m.cut_edges;
  auto& parts = j["parts"] = nlohmann::json::array();
  for (const auto& s : m.parts)
    parts.push_back({{"nodes", s.nodes},
                     {"edges", s.edges},
                     {"neighbors", s.neighbors},
                     {"recv_volume", s.recv_volume}});
  return j.dump(2);
}

void write_dot(std::ostream& out, const structures::Graph& g, const Assignment& p) {
  validate(g, p);
  // volume(p -> q) = distinct source nodes p packs for q per exchange
  std::vector<std::pair<std::pair<int, int>, int>> links;  // ((from, to), src)
  for (const auto& e : g.edges) {
    const int q = p.node_to_part[e.dst], f = p.node_to_part[e.src];
    if (f != q) links.push_back({{f, q}, e.src});
  }
  std::sort(links.begin(), links.end());
  links.erase(std::unique(links.begin(), links.end()), links.end());

  out << "digraph parts {\n";
  std::vector<long> nodes_per(p.n_parts, 0);
  for (int q : p.node_to_part) ++nodes_per[q];
  for (int q = 0; q < p.n_parts; ++q)
    out << "  p" << q << " [label=\"part " << q << "\\n" << nodes_per[q] << " nodes\"];\n";
  for (size_t k = 0; k < links.size();) {
    size_t j = k;
    while (j < links.size() && links[j].first == links[k].first) ++j;
    out << "  p" << links[k].first.first << " -> p" << links[k].first.second << " [label=\""
        << (j - k) << "\"];\n";
    k = j;
  }
  out << "}\n";
}

}  // namespace esgnn::partition
