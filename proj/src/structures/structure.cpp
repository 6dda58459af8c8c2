// SPDX-License-Identifier: Apache-2.0
#include "esgnn/structures/structure.h"

#include <cmath>

#include "esgnn/core/error.h"

namespace esgnn::structures {

Eigen::Vector3d AtomicStructure::fractional(const Eigen::Vector3d& r) const {
  return cell.transpose().inverse() * r;
}

Eigen::Vector3d AtomicStructure::cartesian(const Eigen::Vector3d& f) const {
  return cell.transpose() * f;
}

double AtomicStructure::face_spacing(int d) const {
  const Eigen::Vector3d a = cell.row((d + 1) % 3);
  const Eigen::Vector3d b = cell.row((d + 2) % 3);
  const double area = a.cross(b).norm();
  if (area <= 0.0) throw DataError("degenerate cell");
  return std::abs(cell.determinant()) / area;
}

void AtomicStructure::wrap() {
  if (!any_periodic()) return;
  const Eigen::Matrix3d to_frac = cell.transpose().inverse();
  for (auto& r : positions) {
    Eigen::Vector3d f = to_frac * r;
    for (int d = 0; d < 3; ++d) {
      if (!pbc[d]) continue;
      f[d] -= std::floor(f[d]);
      if (f[d] >= 1.0) f[d] = 0.0;  // guard against floor(1.0 - eps) rounding
    }
    r = cell.transpose() * f;
  }
}

AtomicStructure tile(const AtomicStructure& s, const std::array<int, 3>& n) {
  for (int d = 0; d < 3; ++d) {
    if (n[d] < 1) throw UsageError("tile factors must be positive");
    if (n[d] > 1 && !s.pbc[d]) throw UsageError("cannot tile along aperiodic dimension");
  }
  AtomicStructure out;
  out.pbc = s.pbc;
  for (int d = 0; d < 3; ++d) out.cell.row(d) = s.cell.row(d) * n[d];
  const int na = s.n_atoms();
  out.positions.reserve(static_cast<size_t>(na) * n[0] * n[1] * n[2]);
  out.species.reserve(out.positions.capacity());
  for (int ix = 0; ix < n[0]; ++ix)
    for (int iy = 0; iy < n[1]; ++iy)
      for (int iz = 0; iz < n[2]; ++iz) {
        const Eigen::Vector3d offset = ix * s.cell.row(0).transpose() +
                                       iy * s.cell.row(1).transpose() +
                                       iz * s.cell.row(2).transpose();
        for (int k = 0; k < na; ++k) {
          out.positions.push_back(s.positions[k] + offset);
          out.species.push_back(s.species[k]);
        }
      }
  return out;
}

}  // namespace esgnn::structures
