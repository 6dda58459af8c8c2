// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace esgnn::harmonics {

// Rotation matrices of the real spherical harmonics: block l satisfies
// Y_l(R r) = D_l(R) Y_l(r) with components ordered m = -l..l. Block 1 is R
// itself up to the (x, y, z) <-> (-1, 0, +1) index mapping; higher blocks
// follow from the degree recursion of Ivanic and Ruedenberg. All blocks are
// orthogonal.
std::vector<Eigen::MatrixXd> wigner_blocks(int l_max, const Eigen::Matrix3d& R);

}  // namespace esgnn::harmonics
