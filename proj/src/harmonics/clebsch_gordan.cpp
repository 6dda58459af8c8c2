// SPDX-License-Identifier: Apache-2.0
#include "esgnn/harmonics/clebsch_gordan.h"

#include <cmath>
#include <complex>
#include <map>

#include "esgnn/core/error.h"

namespace esgnn::harmonics {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using std::complex;

// Complex-basis coefficients <la ma; lb mb | L M> (Condon-Shortley, all
// real). Built by lowering from the stretched state and completing each
// top-weight state as the orthogonal complement at its magnetization.
std::vector<MatrixXd> complex_cg(int la, int lb) {
  const int da = 2 * la + 1, db = 2 * lb + 1;
  const int dim = da * db;
  const auto idx = [&](int ma, int mb) { return (ma + la) * db + (mb + lb); };

  const auto lower = [&](const VectorXd& state) {
    VectorXd out = VectorXd::Zero(dim);
    for (int ma = -la; ma <= la; ++ma)
      for (int mb = -lb; mb <= lb; ++mb) {
        const double c = state[idx(ma, mb)];
        if (c == 0.0) continue;
        if (ma > -la) out[idx(ma - 1, mb)] += c * std::sqrt(la * (la + 1.0) - ma * (ma - 1.0));
        if (mb > -lb) out[idx(ma, mb - 1)] += c * std::sqrt(lb * (lb + 1.0) - mb * (mb - 1.0));
      }
    return out;
  };

  const int l_min = std::abs(la - lb), l_max = la + lb;
  // states[L - l_min] rows are M ascending, -L..L at row M + L
  std::vector<MatrixXd> states(l_max - l_min + 1);

  for (int L = l_max; L >= l_min; --L) {
    MatrixXd rows(2 * L + 1, dim);
    VectorXd top = VectorXd::Unit(dim, idx(la, L - la));
    for (int pass = 0; pass < 2; ++pass) {
      for (int Lp = L + 1; Lp <= l_max; ++Lp) {
        const VectorXd other = states[Lp - l_min].row(L + Lp).transpose();
        top -= other.dot(top) * other;
      }
      const double nrm = top.norm();
      if (!(nrm > 1e-12)) throw ShapeError("degenerate coupling state");
      top /= nrm;
    }
    if (top[idx(la, L - la)] < 0.0) top = -top;
    rows.row(2 * L) = top.transpose();
    VectorXd cur = top;
    for (int M = L; M > -L; --M) {
      cur = lower(cur) / std::sqrt(L * (L + 1.0) - M * (M - 1.0));
      cur /= cur.norm();  // exact norm is 1, renormalizing stops drift
      rows.row(L + M - 1) = cur.transpose();
    }
    states[L - l_min] = std::move(rows);
  }
  return states;
}

// Change of basis from complex to real harmonics of degree l, rows indexed
// by the real component, columns by complex m, both -l..l.
MatrixXcd real_from_complex(int l) {
  const int d = 2 * l + 1;
  MatrixXcd b = MatrixXcd::Zero(d, d);
  const double s = 1.0 / std::sqrt(2.0);
  b(l, l) = 1.0;
  for (int m = 1; m <= l; ++m) {
    const double ph = (m % 2 == 0) ? 1.0 : -1.0;  // (-1)^m
    b(l + m, l - m) = s;
    b(l + m, l + m) = ph * s;
    b(l - m, l - m) = complex<double>(0.0, s);
    b(l - m, l + m) = complex<double>(0.0, -ph * s);
  }
  return b;
}

struct PairTable {
  // blocks[L - |la-lb|] for one (la, lb)
  std::vector<MatrixXd> blocks;
};

const PairTable& pair_table(int la, int lb) {
  static const auto tables = [] {
    std::map<std::pair<int, int>, PairTable> t;
    for (int la = 0; la <= kMaxCoupledDegree; ++la)
      for (int lb = 0; lb <= kMaxCoupledDegree; ++lb) {
        const auto cc = complex_cg(la, lb);
        const MatrixXcd ba = real_from_complex(la);
        const MatrixXcd bb = real_from_complex(lb);
        const int da = 2 * la + 1, db = 2 * lb + 1;
        MatrixXcd kron(da * db, da * db);
        for (int i = 0; i < da; ++i)
          for (int j = 0; j < db; ++j)
            for (int k = 0; k < da; ++k)
              for (int m = 0; m < db; ++m) kron(i * db + j, k * db + m) = ba(i, k) * bb(j, m);

        PairTable pt;
        const int l_min = std::abs(la - lb);
        for (int L = l_min; L <= la + lb; ++L) {
          const MatrixXcd u =
              real_from_complex(L) * cc[L - l_min].cast<complex<double>>() * kron.adjoint();
          // u is real or purely imaginary depending on the parity of
          // la + lb - L; either way one fixed phase makes it real.
          MatrixXd r(u.rows(), u.cols());
          const bool odd = (la + lb - L) % 2 != 0;
          double residue = 0.0;
          for (int i = 0; i < u.rows(); ++i)
            for (int j = 0; j < u.cols(); ++j) {
              r(i, j) = odd ? u(i, j).imag() : u(i, j).real();
              residue = std::max(residue, std::abs(odd ? u(i, j).real() : u(i, j).imag()));
            }
          if (residue > 1e-10) throw ShapeError("coupling phase error");
          pt.blocks.push_back(std::move(r));
        }
        t.emplace(std::make_pair(la, lb), std::move(pt));
      }
    return t;
  }();
  const auto it = tables.find({la, lb});
  if (it == tables.end()) throw ShapeError("coupled degree out of supported range");
  return it->second;
}

}  // namespace

const MatrixXd& coupling_matrix(int l_a, int l_b, int L) {
  if (l_a < 0 || l_b < 0 || l_a > kMaxCoupledDegree || l_b > kMaxCoupledDegree)
    throw ShapeError("coupled degree out of supported range");
  if (L < std::abs(l_a - l_b) || L > l_a + l_b)
    throw ShapeError("coupled degree violates the triangle rule");
  return pair_table(l_a, l_b).blocks[L - std::abs(l_a - l_b)];
}

Eigen::VectorXd to_coupled(int l_a, int l_b, const MatrixXd& block) {
  const int da = 2 * l_a + 1, db = 2 * l_b + 1;
  if (block.rows() != da || block.cols() != db) throw ShapeError("block shape mismatch");
  VectorXd flat(da * db);
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < db; ++j) flat[i * db + j] = block(i, j);
  VectorXd out(da * db);
  int off = 0;
  for (int L = std::abs(l_a - l_b); L <= l_a + l_b; ++L) {
    out.segment(off, 2 * L + 1) = coupling_matrix(l_a, l_b, L) * flat;
    off += 2 * L + 1;
  }
  return out;
}

Eigen::MatrixXd to_block(int l_a, int l_b, const VectorXd& coupled) {
  const int da = 2 * l_a + 1, db = 2 * l_b + 1;
  if (coupled.size() != da * db) throw ShapeError("coupled length mismatch");
  VectorXd flat = VectorXd::Zero(da * db);
  int off = 0;
  for (int L = std::abs(l_a - l_b); L <= l_a + l_b; ++L) {
    flat += coupling_matrix(l_a, l_b, L).transpose() * coupled.segment(off, 2 * L + 1);
    off += 2 * L + 1;
  }
  MatrixXd block(da, db);
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < db; ++j) block(i, j) = flat[i * db + j];
  return block;
}

}  // namespace esgnn::harmonics
