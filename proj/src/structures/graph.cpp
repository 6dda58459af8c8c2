// SPDX-License-Identifier: Apache-2.0
#include "esgnn/structures/graph.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "esgnn/core/error.h"

namespace esgnn::structures {

namespace {

struct Ghost {
  int atom;
  std::array<int, 3> shift;
  Eigen::Vector3d pos;
};

struct BinGrid {
  Eigen::Vector3d origin;
  double width;
  std::array<int, 3> dims;
  std::vector<std::vector<int>> cells;  // ghost indices per bin

  int bin_of(const Eigen::Vector3d& p) const {
    std::array<int, 3> b;
    for (int d = 0; d < 3; ++d) {
      int i = static_cast<int>(std::floor((p[d] - origin[d]) / width));
      b[d] = std::clamp(i, 0, dims[d] - 1);
    }
    return (b[0] * dims[1] + b[1]) * dims[2] + b[2];
  }
};

}  // namespace

std::vector<std::pair<int, int>> Graph::incoming_ranges() const {
  std::vector<std::pair<int, int>> ranges(n_nodes, {0, 0});
  int e = 0;
  for (int node = 0; node < n_nodes; ++node) {
    const int begin = e;
    while (e < n_edges() && edges[e].dst == node) ++e;
    ranges[node] = {begin, e};
  }
  return ranges;
}

std::vector<int> Graph::in_degrees() const {
  std::vector<int> deg(n_nodes, 0);
  for (const auto& e : edges) ++deg[e.dst];
  return deg;
}

Graph build_graph(const AtomicStructure& input, double r_cut) {
  if (r_cut <= 0.0) throw UsageError("cutoff must be positive");
  AtomicStructure s = input;
  s.wrap();
  const int na = s.n_atoms();

  std::array<int, 3> nimg = {0, 0, 0};
  for (int d = 0; d < 3; ++d)
    if (s.pbc[d]) nimg[d] = static_cast<int>(std::ceil(r_cut / s.face_spacing(d)));

  std::vector<Ghost> ghosts;
  ghosts.reserve(static_cast<size_t>(na) * (2 * nimg[0] + 1) * (2 * nimg[1] + 1) *
                 (2 * nimg[2] + 1));
  for (int sx = -nimg[0]; sx <= nimg[0]; ++sx)
    for (int sy = -nimg[1]; sy <= nimg[1]; ++sy)
      for (int sz = -nimg[2]; sz <= nimg[2]; ++sz) {
        const Eigen::Vector3d offset = sx * s.cell.row(0).transpose() +
                                       sy * s.cell.row(1).transpose() +
                                       sz * s.cell.row(2).transpose();
        for (int k = 0; k < na; ++k)
          ghosts.push_back({k, {sx, sy, sz}, s.positions[k] + offset});
      }

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::max());
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(std::numeric_limits<double>::lowest());
  for (const auto& g : ghosts) {
    lo = lo.cwiseMin(g.pos);
    hi = hi.cwiseMax(g.pos);
  }

  BinGrid grid;
  grid.origin = lo;
  grid.width = r_cut;
  for (int d = 0; d < 3; ++d) {
    grid.dims[d] = std::max(1, static_cast<int>(std::floor((hi[d] - lo[d]) / r_cut)) + 1);
  }
  grid.cells.resize(static_cast<size_t>(grid.dims[0]) * grid.dims[1] * grid.dims[2]);
  for (int g = 0; g < static_cast<int>(ghosts.size()); ++g)
    grid.cells[grid.bin_of(ghosts[g].pos)].push_back(g);

  Graph graph;
  graph.n_nodes = na;
  const double r2 = r_cut * r_cut;
  for (int i = 0; i < na; ++i) {
    const Eigen::Vector3d& ri = s.positions[i];
    std::array<int, 3> b;
    for (int d = 0; d < 3; ++d)
      b[d] = std::clamp(static_cast<int>(std::floor((ri[d] - grid.origin[d]) / grid.width)), 0,
                        grid.dims[d] - 1);
    for (int bx = std::max(0, b[0] - 1); bx <= std::min(grid.dims[0] - 1, b[0] + 1); ++bx)
      for (int by = std::max(0, b[1] - 1); by <= std::min(grid.dims[1] - 1, b[1] + 1); ++by)
        for (int bz = std::max(0, b[2] - 1); bz <= std::min(grid.dims[2] - 1, b[2] + 1); ++bz) {
          const auto& cell = grid.cells[(bx * grid.dims[1] + by) * grid.dims[2] + bz];
          for (int g : cell) {
            const Ghost& gh = ghosts[g];
            if (gh.atom == i && gh.shift == std::array<int, 3>{0, 0, 0}) continue;
            const Eigen::Vector3d d = gh.pos - ri;
            const double d2 = d.squaredNorm();
            if (d2 > r2) continue;
            Edge e;
            e.src = i;
            e.dst = gh.atom;
            e.shift = gh.shift;
            e.displacement = d;
            e.distance = std::sqrt(d2);
            graph.edges.push_back(e);
          }
        }
  }

  std::sort(graph.edges.begin(), graph.edges.end(), [](const Edge& a, const Edge& b) {
    if (a.dst != b.dst) return a.dst < b.dst;
    if (a.src != b.src) return a.src < b.src;
    return a.shift < b.shift;
  });
  return graph;
}

}  // namespace esgnn::structures
