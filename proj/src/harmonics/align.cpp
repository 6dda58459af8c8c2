// SPDX-License-Identifier: Apache-2.0
#include "esgnn/harmonics/align.h"

#include <algorithm>
#include <cmath>

#include "esgnn/core/error.h"

namespace esgnn::harmonics {

Eigen::Matrix3d rotation_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Eigen::Matrix3d rotation_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Eigen::Matrix3d rotation_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Eigen::Matrix3d align_to_y(const Eigen::Vector3d& r) {
  const double n = r.norm();
  if (!(n > 0.0)) throw ShapeError("cannot align a zero vector");
  const Eigen::Vector3d u = r / n;
  const double alpha = std::atan2(u[0], u[2]);
  const double beta = std::acos(std::clamp(u[1], -1.0, 1.0));
  return rotation_x(-beta) * rotation_y(-alpha);
}

}  // namespace esgnn::harmonics
