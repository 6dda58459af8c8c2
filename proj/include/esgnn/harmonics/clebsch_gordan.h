// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace esgnn::harmonics {

// Couples two real-harmonic degrees. coupling_matrix(la, lb, L) has shape
// (2L+1) x ((2la+1)(2lb+1)); its rows are orthonormal and it intertwines the
// rotations: C (D_la(R) kron D_lb(R)) = D_L(R) C. Product index is a-major:
// p = (ma + la) * (2lb + 1) + (mb + lb). Stacking the blocks for
// L = |la-lb| .. la+lb gives an orthogonal change of basis.
//
// Matrices live in a table built once; references stay valid for the
// program's lifetime. Degrees up to 6 are supported.
constexpr int kMaxCoupledDegree = 6;

const Eigen::MatrixXd& coupling_matrix(int l_a, int l_b, int L);

// Coupled view of a (2la+1) x (2lb+1) block: segments for ascending L, each
// of length 2L+1. to_block is the inverse.
Eigen::VectorXd to_coupled(int l_a, int l_b, const Eigen::MatrixXd& block);
Eigen::MatrixXd to_block(int l_a, int l_b, const Eigen::VectorXd& coupled);

}  // namespace esgnn::harmonics
