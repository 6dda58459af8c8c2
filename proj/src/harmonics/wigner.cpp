// SPDX-License-Identifier: Apache-2.0
#include "esgnn/harmonics/wigner.h"

#include <cmath>

#include "esgnn/core/error.h"

namespace esgnn::harmonics {

namespace {

inline double delta(int a, int b) { return a == b ? 1.0 : 0.0; }

struct Level {
  const Eigen::Matrix3d& r1;      // band-1 matrix, indices -1..1
  const Eigen::MatrixXd& prev;    // previous degree, indices -(l-1)..(l-1)
  int l;

  double band(int i, int j) const { return r1(i + 1, j + 1); }
  double pm(int a, int b) const { return prev(a + l - 1, b + l - 1); }

  double p(int i, int a, int b) const {
    if (b == l) return band(i, 1) * pm(a, l - 1) - band(i, -1) * pm(a, -l + 1);
    if (b == -l) return band(i, 1) * pm(a, -l + 1) + band(i, -1) * pm(a, l - 1);
    return band(i, 0) * pm(a, b);
  }

  double u_term(int m, int n) const { return p(0, m, n); }

  double v_term(int m, int n) const {
    if (m == 0) return p(1, 1, n) + p(-1, -1, n);
    if (m > 0)
      return p(1, m - 1, n) * std::sqrt(1.0 + delta(m, 1)) -
             p(-1, -m + 1, n) * (1.0 - delta(m, 1));
    return p(1, m + 1, n) * (1.0 - delta(m, -1)) +
           p(-1, -m - 1, n) * std::sqrt(1.0 + delta(m, -1));
  }

  double w_term(int m, int n) const {
    if (m > 0) return p(1, m + 1, n) + p(-1, -m - 1, n);
    return p(1, m - 1, n) - p(-1, -m + 1, n);
  }
};

}  // namespace

std::vector<Eigen::MatrixXd> wigner_blocks(int l_max, const Eigen::Matrix3d& R) {
  if (l_max < 0) throw ShapeError("negative degree");
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(l_max + 1);
  blocks.emplace_back(Eigen::MatrixXd::Ones(1, 1));
  if (l_max == 0) return blocks;

  // Band 1 equals R with axes (x, y, z) read as m = (-1, 0, +1).
  Eigen::Matrix3d band1 = R;
  blocks.emplace_back(band1);

  for (int l = 2; l <= l_max; ++l) {
    const Level lv{band1, blocks[l - 1], l};
    Eigen::MatrixXd d(2 * l + 1, 2 * l + 1);
    for (int m = -l; m <= l; ++m) {
      for (int n = -l; n <= l; ++n) {
        const double denom =
            (std::abs(n) == l) ? (2.0 * l) * (2.0 * l - 1.0) : double(l + n) * double(l - n);
        const double u = std::sqrt(double(l + m) * double(l - m) / denom);
        const double v = 0.5 *
                         std::sqrt((1.0 + delta(m, 0)) * (l + std::abs(m) - 1.0) *
                                   (l + std::abs(m)) / denom) *
                         (1.0 - 2.0 * delta(m, 0));
        const double w = -0.5 *
                         std::sqrt((l - std::abs(m) - 1.0) * (l - std::abs(m)) / denom) *
                         (1.0 - delta(m, 0));
        double e = 0.0;
        if (u != 0.0) e += u * lv.u_term(m, n);
        if (v != 0.0) e += v * lv.v_term(m, n);
        if (w != 0.0) e += w * lv.w_term(m, n);
        d(m + l, n + l) = e;
      }
    }
    blocks.push_back(std::move(d));
  }
  return blocks;
}

}  // namespace esgnn::harmonics
