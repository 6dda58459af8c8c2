// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace esgnn::harmonics {

Eigen::Matrix3d rotation_x(double angle);
Eigen::Matrix3d rotation_y(double angle);
Eigen::Matrix3d rotation_z(double angle);

// Rotation taking the direction of r onto +y. Deterministic everywhere,
// including the antipode: align_to_y(-y) is a half turn about x. The inverse
// is the transpose.
Eigen::Matrix3d align_to_y(const Eigen::Vector3d& r);

}  // namespace esgnn::harmonics
