// SPDX-License-Identifier: Apache-2.0
#include "esgnn/harmonics/real_sh.h"

#include <algorithm>
#include <cmath>

#include "esgnn/core/error.h"

namespace esgnn::harmonics {

namespace {

double norm_factor(int l, int m) {
  double ratio = 1.0;  // (l-m)! / (l+m)!
  for (int k = l - m + 1; k <= l + m; ++k) ratio /= k;
  return std::sqrt((2 * l + 1) / (4.0 * M_PI) * ratio);
}

}  // namespace

Eigen::VectorXd real_sh(int l_max, const Eigen::Vector3d& r) {
  if (l_max < 0) throw ShapeError("negative degree");
  const double n = r.norm();
  if (!(n > 0.0)) throw ShapeError("cannot evaluate harmonics on a zero vector");
  const Eigen::Vector3d u = r / n;

  // Polar angle from +y, azimuth in the z-x plane.
  const double ct = std::clamp(u[1], -1.0, 1.0);
  const double phi = std::atan2(u[0], u[2]);

  Eigen::VectorXd out(n_sh(l_max));
  for (int l = 0; l <= l_max; ++l) {
    out[sh_index(l, 0)] = norm_factor(l, 0) * std::assoc_legendre(l, 0, ct);
    for (int m = 1; m <= l; ++m) {
      const double p = std::assoc_legendre(l, m, ct);  // no Condon-Shortley phase
      const double k = std::sqrt(2.0) * norm_factor(l, m);
      out[sh_index(l, m)] = k * std::cos(m * phi) * p;
      out[sh_index(l, -m)] = k * std::sin(m * phi) * p;
    }
  }
  return out;
}

}  // namespace esgnn::harmonics
