// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace esgnn::structures {

// Atoms in a (possibly periodic) simulation cell. Rows of `cell` are the
// lattice vectors; positions are Cartesian.
struct AtomicStructure {
  std::vector<Eigen::Vector3d> positions;
  std::vector<int> species;  // atomic numbers
  Eigen::Matrix3d cell = Eigen::Matrix3d::Identity();
  std::array<bool, 3> pbc = {false, false, false};

  int n_atoms() const { return static_cast<int>(positions.size()); }
  bool any_periodic() const { return pbc[0] || pbc[1] || pbc[2]; }

  Eigen::Vector3d fractional(const Eigen::Vector3d& r) const;
  Eigen::Vector3d cartesian(const Eigen::Vector3d& f) const;

  // Perpendicular distance between the two cell faces normal to lattice
  // direction d. Controls how many periodic images a cutoff can reach.
  double face_spacing(int d) const;

  // Maps positions of periodic dimensions into the canonical cell, i.e.
  // fractional coordinates in [0, 1). Aperiodic dimensions are untouched.
  void wrap();
};

// Replicates the cell n[0] x n[1] x n[2] times. Atom k of replica
// (ix, iy, iz) gets index replica_id * n_atoms + k with
// replica_id = (ix * n[1] + iy) * n[2] + iz.
AtomicStructure tile(const AtomicStructure& s, const std::array<int, 3>& n);

}  // namespace esgnn::structures
