// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace esgnn::harmonics {

// Real spherical harmonics with the polar axis along +y: the m = 0 component
// of every degree is rotation-invariant about y, and (l, -m), (l, +m) pairs
// mix under such rotations as plane rotations by m times the angle. Degree 1
// is proportional to (x, y, z) for m = (-1, 0, +1).
//
// Components are packed degree-major: index(l, m) = l*l + l + m.

constexpr int sh_index(int l, int m) { return l * l + l + m; }
constexpr int n_sh(int l_max) { return (l_max + 1) * (l_max + 1); }

// Evaluates all components for l <= l_max at direction r (normalized here;
// r must be nonzero).
Eigen::VectorXd real_sh(int l_max, const Eigen::Vector3d& r);

}  // namespace esgnn::harmonics
