// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "esgnn/core/error.h"
#include "esgnn/harmonics/align.h"
#include "esgnn/harmonics/clebsch_gordan.h"
#include "esgnn/harmonics/real_sh.h"
#include "esgnn/harmonics/wigner.h"

using namespace esgnn;
using namespace esgnn::harmonics;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-3) v = {n(rng), n(rng), n(rng)};
  return v.normalized();
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-kPi, kPi);
  return rotation_z(u(rng)) * rotation_y(u(rng)) * rotation_x(u(rng));
}

// Closed forms for degrees 0..3. The polar axis is y and the azimuth is
// measured from z toward x, so the (x, y, z) monomials land at m = -1, 0, +1.
std::vector<double> sh_closed_form(const Eigen::Vector3d& u) {
  const double x = u[0], y = u[1], z = u[2];
  std::vector<double> v(16);
  v[0] = std::sqrt(1.0 / (4.0 * kPi));
  const double c1 = std::sqrt(3.0 / (4.0 * kPi));
  v[1] = c1 * x;
  v[2] = c1 * y;
  v[3] = c1 * z;
  v[4] = 0.5 * std::sqrt(15.0 / kPi) * z * x;
  v[5] = 0.5 * std::sqrt(15.0 / kPi) * x * y;
  v[6] = 0.25 * std::sqrt(5.0 / kPi) * (3.0 * y * y - 1.0);
  v[7] = 0.5 * std::sqrt(15.0 / kPi) * y * z;
  v[8] = 0.25 * std::sqrt(15.0 / kPi) * (z * z - x * x);
  v[9] = 0.25 * std::sqrt(35.0 / (2.0 * kPi)) * x * (3.0 * z * z - x * x);
  v[10] = 0.5 * std::sqrt(105.0 / kPi) * z * x * y;
  v[11] = 0.25 * std::sqrt(21.0 / (2.0 * kPi)) * x * (5.0 * y * y - 1.0);
  v[12] = 0.25 * std::sqrt(7.0 / kPi) * y * (5.0 * y * y - 3.0);
  v[13] = 0.25 * std::sqrt(21.0 / (2.0 * kPi)) * z * (5.0 * y * y - 1.0);
  v[14] = 0.25 * std::sqrt(105.0 / kPi) * y * (z * z - x * x);
  v[15] = 0.25 * std::sqrt(35.0 / (2.0 * kPi)) * z * (z * z - 3.0 * x * x);
  return v;
}

Eigen::MatrixXd dense_wigner(int l_max, const Eigen::Matrix3d& r) {
  auto blocks = wigner_blocks(l_max, r);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_sh(l_max), n_sh(l_max));
  for (int l = 0; l <= l_max; ++l)
    d.block(l * l, l * l, 2 * l + 1, 2 * l + 1) = blocks[l];
  return d;
}

}  // namespace

TEST_SUITE("harmonics") {

TEST_CASE("closed forms up to degree three") {
  std::mt19937_64 rng(101);
  for (int t = 0; t < 50; ++t) {
    Eigen::Vector3d u = random_unit(rng);
    Eigen::VectorXd got = real_sh(3, u);
    auto want = sh_closed_form(u);
    REQUIRE(got.size() == 16);
    for (int k = 0; k < 16; ++k) CHECK(std::abs(got[k] - want[k]) < 1e-12);
  }
}

TEST_CASE("special directions") {
  Eigen::VectorXd yplus = real_sh(4, Eigen::Vector3d::UnitY());
  // Along the polar axis only m = 0 survives, with value sqrt((2l+1)/4pi).
  for (int l = 0; l <= 4; ++l)
    for (int m = -l; m <= l; ++m) {
      double want = m == 0 ? std::sqrt((2.0 * l + 1.0) / (4.0 * kPi)) : 0.0;
      CHECK(std::abs(yplus[sh_index(l, m)] - want) < 1e-12);
    }
  // Opposite pole picks up the parity sign (-1)^l.
  Eigen::VectorXd yminus = real_sh(4, -Eigen::Vector3d::UnitY());
  for (int l = 0; l <= 4; ++l)
    CHECK(std::abs(yminus[sh_index(l, 0)] -
                   (l % 2 ? -1.0 : 1.0) * std::sqrt((2.0 * l + 1.0) / (4.0 * kPi))) < 1e-12);
}

TEST_CASE("orthonormality on the sphere") {
  // Lebedev-free check: uniform random Monte Carlo is too noisy, so use a
  // product Gauss grid: 24 polar x 48 azimuthal trapezoid is exact for
  // polynomials of this degree.
  const int n_ct = 24, n_phi = 48;
  std::vector<double> nodes(n_ct), weights(n_ct);
  // Gauss-Legendre nodes by Newton on P_n.
  for (int i = 0; i < n_ct; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n_ct + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n_ct; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n_ct * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n_ct; ++k) {
      double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n_ct * (x * p1 - p0) / (x * x - 1.0);
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  const int lm = 5;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_sh(lm), n_sh(lm));
  for (int i = 0; i < n_ct; ++i)
    for (int j = 0; j < n_phi; ++j) {
      double ct = nodes[i], st = std::sqrt(1.0 - ct * ct);
      double phi = 2.0 * kPi * j / n_phi;
      // azimuth from z toward x, pole on y
      Eigen::Vector3d u(st * std::sin(phi), ct, st * std::cos(phi));
      Eigen::VectorXd y = real_sh(lm, u);
      gram += (weights[i] * 2.0 * kPi / n_phi) * (y * y.transpose());
    }
  CHECK((gram - Eigen::MatrixXd::Identity(n_sh(lm), n_sh(lm))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rotation property ties harmonics to the rotation matrices") {
  std::mt19937_64 rng(202);
  for (int t = 0; t < 25; ++t) {
    Eigen::Matrix3d r = random_rotation(rng);
    Eigen::Vector3d u = random_unit(rng);
    auto blocks = wigner_blocks(6, r);
    Eigen::VectorXd y = real_sh(6, u);
    Eigen::VectorXd yr = real_sh(6, r * u);
    for (int l = 0; l <= 6; ++l)
      CHECK((yr.segment(l * l, 2 * l + 1) - blocks[l] * y.segment(l * l, 2 * l + 1))
                .cwiseAbs()
                .maxCoeff() < 1e-11);
  }
}

TEST_CASE("degree one block is the rotation itself") {
  std::mt19937_64 rng(303);
  Eigen::Matrix3d r = random_rotation(rng);
  auto blocks = wigner_blocks(2, r);
  CHECK((blocks[0] - Eigen::MatrixXd::Ones(1, 1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((blocks[1] - r).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rotation matrices are a homomorphism") {
  std::mt19937_64 rng(404);
  for (int t = 0; t < 10; ++t) {
    Eigen::Matrix3d r1 = random_rotation(rng);
    Eigen::Matrix3d r2 = random_rotation(rng);
    Eigen::MatrixXd d1 = dense_wigner(6, r1);
    Eigen::MatrixXd d2 = dense_wigner(6, r2);
    Eigen::MatrixXd d12 = dense_wigner(6, r1 * r2);
    CHECK((d12 - d1 * d2).cwiseAbs().maxCoeff() < 1e-11);
    CHECK((d1 * d1.transpose() - Eigen::MatrixXd::Identity(d1.rows(), d1.cols()))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("rotation about y is block diagonal in m") {
  // The stabilizer of the polar axis must act within each (m-, m+) pair;
  // that is what makes the per-m weight structure valid.
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  double g = u(rng);
  auto blocks = wigner_blocks(4, rotation_y(g));
  for (int l = 0; l <= 4; ++l) {
    const auto& d = blocks[l];
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n) {
        if (std::abs(m) != std::abs(n)) CHECK(std::abs(d(m + l, n + l)) < 1e-13);
      }
    for (int m = 1; m <= l; ++m) {
      double c = std::cos(m * g), s = std::sin(m * g);
      CHECK(d(l + m, l + m) == doctest::Approx(c).epsilon(1e-12));
      CHECK(d(l - m, l - m) == doctest::Approx(c).epsilon(1e-12));
      // sign pattern of the off-diagonal pair fixes the orientation
      CHECK(d(l - m, l + m) == doctest::Approx(s).epsilon(1e-12));
      CHECK(d(l + m, l - m) == doctest::Approx(-s).epsilon(1e-12));
    }
    CHECK(d(l, l) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("alignment sends the edge direction to the pole") {
  std::mt19937_64 rng(606);
  for (int t = 0; t < 40; ++t) {
    Eigen::Vector3d u = random_unit(rng);
    Eigen::Matrix3d a = align_to_y(u);
    CHECK((a * u - Eigen::Vector3d::UnitY()).norm() < 1e-12);
    CHECK((a * a.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(a.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK((align_to_y(Eigen::Vector3d::UnitY()) - Eigen::Matrix3d::Identity()).norm() < 1e-14);
  CHECK((align_to_y(-Eigen::Vector3d::UnitY()) * -Eigen::Vector3d::UnitY() -
         Eigen::Vector3d::UnitY())
            .norm() < 1e-14);
  // After alignment the harmonics of the direction collapse to the m = 0 column.
  Eigen::Vector3d u = random_unit(rng);
  auto blocks = wigner_blocks(4, align_to_y(u));
  Eigen::VectorXd y = real_sh(4, u);
  for (int l = 0; l <= 4; ++l) {
    Eigen::VectorXd aligned = blocks[l] * y.segment(l * l, 2 * l + 1);
    for (int m = -l; m <= l; ++m) {
      double want = m == 0 ? std::sqrt((2.0 * l + 1.0) / (4.0 * kPi)) : 0.0;
      CHECK(std::abs(aligned[l + m] - want) < 1e-11);
    }
  }
}

TEST_CASE("coupling rows are orthonormal and complete") {
  for (int la = 0; la <= 4; ++la)
    for (int lb = 0; lb <= 4; ++lb) {
      const int dim = (2 * la + 1) * (2 * lb + 1);
      Eigen::MatrixXd stack(dim, dim);
      int at = 0;
      for (int L = std::abs(la - lb); L <= la + lb; ++L) {
        stack.middleRows(at, 2 * L + 1) = coupling_matrix(la, lb, L);
        at += 2 * L + 1;
      }
      REQUIRE(at == dim);
      CHECK((stack * stack.transpose() - Eigen::MatrixXd::Identity(dim, dim))
                .cwiseAbs()
                .maxCoeff() < 1e-13);
    }
}

TEST_CASE("coupling intertwines the rotations") {
  std::mt19937_64 rng(707);
  for (int t = 0; t < 5; ++t) {
    Eigen::Matrix3d r = random_rotation(rng);
    auto blocks = wigner_blocks(6, r);
    for (int la = 0; la <= 3; ++la)
      for (int lb = 0; lb <= 3; ++lb)
        for (int L = std::abs(la - lb); L <= la + lb; ++L) {
          const auto& c = coupling_matrix(la, lb, L);
          Eigen::MatrixXd kron = Eigen::MatrixXd::Zero((2 * la + 1) * (2 * lb + 1),
                                                       (2 * la + 1) * (2 * lb + 1));
          for (int i = 0; i < 2 * la + 1; ++i)
            for (int j = 0; j < 2 * la + 1; ++j)
              kron.block(i * (2 * lb + 1), j * (2 * lb + 1), 2 * lb + 1, 2 * lb + 1) =
                  blocks[la](i, j) * blocks[lb];
          CHECK((c * kron - blocks[L] * c).cwiseAbs().maxCoeff() < 1e-11);
        }
  }
}

TEST_CASE("scalar coupling of equal degrees is the normalized trace") {
  for (int l = 0; l <= 4; ++l) {
    const auto& c = coupling_matrix(l, l, 0);
    const int n = 2 * l + 1;
    Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(c.row(0).data(), n, n);
    // rows are a-major over (ma, mb); the scalar part must be proportional
    // to the identity with weight 1/sqrt(2l+1)
    double s = 1.0 / std::sqrt(double(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        CHECK(std::abs(std::abs(c(0, i * n + j)) - (i == j ? s : 0.0)) < 1e-13);
  }
}

TEST_CASE("coupled round trip is exact") {
  std::mt19937_64 rng(808);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int la = 0; la <= 4; ++la)
    for (int lb = 0; lb <= 4; ++lb) {
      Eigen::MatrixXd block(2 * la + 1, 2 * lb + 1);
      for (int i = 0; i < block.rows(); ++i)
        for (int j = 0; j < block.cols(); ++j) block(i, j) = n(rng);
      Eigen::VectorXd coupled = to_coupled(la, lb, block);
      Eigen::MatrixXd back = to_block(la, lb, coupled);
      CHECK((back - block).cwiseAbs().maxCoeff() < 1e-12);
      // norm preserved by orthogonality
      CHECK(coupled.norm() == doctest::Approx(block.norm()).epsilon(1e-12));
    }
}

TEST_CASE("coupled components transform by their own degree") {
  std::mt19937_64 rng(909);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Matrix3d r = random_rotation(rng);
  auto blocks = wigner_blocks(6, r);
  for (int la = 1; la <= 3; ++la)
    for (int lb = 1; lb <= 3; ++lb) {
      Eigen::MatrixXd block(2 * la + 1, 2 * lb + 1);
      for (int i = 0; i < block.rows(); ++i)
        for (int j = 0; j < block.cols(); ++j) block(i, j) = n(rng);
      Eigen::VectorXd coupled = to_coupled(la, lb, block);
      Eigen::MatrixXd rotated = blocks[la] * block * blocks[lb].transpose();
      Eigen::VectorXd coupled_rot = to_coupled(la, lb, rotated);
      int at = 0;
      for (int L = std::abs(la - lb); L <= la + lb; ++L) {
        CHECK((coupled_rot.segment(at, 2 * L + 1) - blocks[L] * coupled.segment(at, 2 * L + 1))
                  .cwiseAbs()
                  .maxCoeff() < 1e-11);
        at += 2 * L + 1;
      }
    }
}

TEST_CASE("degree bounds are enforced") {
  CHECK_THROWS_AS(coupling_matrix(7, 0, 7), Error);
  CHECK_THROWS_AS(coupling_matrix(1, 1, 3), Error);
  CHECK_THROWS_AS(real_sh(2, Eigen::Vector3d::Zero()), ShapeError);
}

}  // TEST_SUITE
