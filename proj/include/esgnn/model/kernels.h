// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "esgnn/harmonics/align.h"
#include "esgnn/harmonics/wigner.h"
#include "esgnn/model/graph_view.h"
#include "esgnn/model/layout.h"
#include "esgnn/model/tensor.h"

namespace esgnn::model::kernels {

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

// Per-edge alignment rotations: the stacked degree blocks of the rotation
// taking each edge direction onto +y, flattened edge-major. The inverse is
// the transpose of each block.
template <typename T>
struct EdgeRotations {
  int l_max = 0;
  int h = 0;
  int stride = 0;                  // scalars per edge
  std::vector<int> block_offset;   // per l within one edge's slab
  std::vector<T> blocks;           // n_edges * stride

  const T* block(int edge, int l) const {
    return blocks.data() + size_t(edge) * stride + block_offset[l];
  }
};

template <typename T>
EdgeRotations<T> build_edge_rotations(const GraphView& view, int l_max) {
  EdgeRotations<T> rot;
  rot.l_max = l_max;
  rot.h = harmonics::n_sh(l_max);
  rot.block_offset.resize(l_max + 1);
  int off = 0;
  for (int l = 0; l <= l_max; ++l) {
    rot.block_offset[l] = off;
    off += (2 * l + 1) * (2 * l + 1);
  }
  rot.stride = off;
  rot.blocks.resize(size_t(view.n_edges()) * off);
  for (int e = 0; e < view.n_edges(); ++e) {
    const Eigen::Matrix3d r = harmonics::align_to_y(view.edges[e].displacement);
    const auto blocks = harmonics::wigner_blocks(l_max, r);
    T* out = rot.blocks.data() + size_t(e) * off;
    for (int l = 0; l <= l_max; ++l) {
      const auto& b = blocks[l];
      const int d = 2 * l + 1;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out[rot.block_offset[l] + i * d + j] = static_cast<T>(b(i, j));
    }
  }
  return rot;
}

// y[e] = D_e x[e] per degree block (transpose = true applies D_e^T, the
// inverse rotation). Used for both forward passes and, transposed, for the
// gradient.
template <typename T>
void rotate(const Tensor<T>& x, const EdgeRotations<T>& rot, bool transpose, Tensor<T>& y,
            bool accumulate = false) {
  y.require(x.n, x.h, x.c);
  for (int e = 0; e < x.n; ++e) {
    for (int l = 0; l <= rot.l_max; ++l) {
      const int d = 2 * l + 1;
      ConstMatMap<T> dm(rot.block(e, l), d, d);
      ConstMatMap<T> xm(x.row(e) + size_t(l * l) * x.c, d, x.c);
      MatMap<T> ym(y.row(e) + size_t(l * l) * y.c, d, y.c);
      if (accumulate) {
        if (transpose)
          ym += dm.transpose() * xm;
        else
          ym += dm * xm;
      } else {
        if (transpose)
          ym = dm.transpose() * xm;
        else
          ym = dm * xm;
      }
    }
  }
}

// Row permutation within each item: y[perm[r]] = x[r].
template <typename T>
void permute_components(const Tensor<T>& x, const std::vector<int>& perm, Tensor<T>& y,
                        bool accumulate = false) {
  y.require(x.n, x.h, x.c);
  for (int i = 0; i < x.n; ++i) {
    const T* xr = x.row(i);
    T* yr = y.row(i);
    for (int r = 0; r < x.h; ++r) {
      T* dst = yr + size_t(perm[r]) * x.c;
      const T* src = xr + size_t(r) * x.c;
      if (accumulate)
        for (int cc = 0; cc < x.c; ++cc) dst[cc] += src[cc];
      else
        for (int cc = 0; cc < x.c; ++cc) dst[cc] = src[cc];
    }
  }
}

// Weight views for one SO(2) linear layer: a plain matrix for m = 0 and a
// (real, imaginary) pair for each m >= 1, mixing degrees and channels while
// commuting with rotations about the alignment axis.
template <typename T>
struct So2Weights {
  int l_max = 0, cin = 0, cout = 0;
  const T* m0 = nullptr;
  std::vector<const T*> wr, wi;  // index m-1
};

template <typename T>
struct So2Grads {
  T* m0 = nullptr;
  std::vector<T*> wr, wi;
};

template <typename T>
void so2_linear(const Tensor<T>& x, const So2Weights<T>& w, const MMajorLayout& lay,
                Tensor<T>& y) {
  const int cin = w.cin, cout = w.cout;
  x.require(x.n, lay.h, cin);
  y.require(x.n, lay.h, cout);
  for (int i = 0; i < x.n; ++i) {
    const T* xr = x.row(i);
    T* yr = y.row(i);
    {
      const int nd = lay.n_degrees(0);
      ConstMatMap<T> w0(w.m0, nd * cout, nd * cin);
      ConstVecMap<T> xv(xr, nd * cin);
      VecMap<T> yv(yr, nd * cout);
      yv = w0 * xv;
    }
    for (int m = 1; m <= lay.l_max; ++m) {
      const int nd = lay.n_degrees(m);
      ConstMatMap<T> wr(w.wr[m - 1], nd * cout, nd * cin);
      ConstMatMap<T> wi(w.wi[m - 1], nd * cout, nd * cin);
      ConstVecMap<T> xm(xr + size_t(lay.m_offset[m]) * cin, nd * cin);
      ConstVecMap<T> xp(xr + size_t(lay.m_offset[m] + nd) * cin, nd * cin);
      VecMap<T> ym(yr + size_t(lay.m_offset[m]) * cout, nd * cout);
      VecMap<T> yp(yr + size_t(lay.m_offset[m] + nd) * cout, nd * cout);
      ym = wr * xm + wi * xp;
      yp = wr * xp - wi * xm;
    }
  }
}

template <typename T>
void so2_linear_backward(const Tensor<T>& x, const So2Weights<T>& w, const MMajorLayout& lay,
                         const Tensor<T>& dy, Tensor<T>& dx, const So2Grads<T>& dw) {
  const int cin = w.cin, cout = w.cout;
  for (int i = 0; i < x.n; ++i) {
    const T* xr = x.row(i);
    const T* gr = dy.row(i);
    T* dxr = dx.row(i);
    {
      const int nd = lay.n_degrees(0);
      ConstMatMap<T> w0(w.m0, nd * cout, nd * cin);
      MatMap<T> dw0(dw.m0, nd * cout, nd * cin);
      ConstVecMap<T> xv(xr, nd * cin);
      ConstVecMap<T> gv(gr, nd * cout);
      VecMap<T> dxv(dxr, nd * cin);
      dxv += w0.transpose() * gv;
      dw0 += gv * xv.transpose();
    }
    for (int m = 1; m <= lay.l_max; ++m) {
      const int nd = lay.n_degrees(m);
      ConstMatMap<T> wr(w.wr[m - 1], nd * cout, nd * cin);
      ConstMatMap<T> wi(w.wi[m - 1], nd * cout, nd * cin);
      MatMap<T> dwr(dw.wr[m - 1], nd * cout, nd * cin);
      MatMap<T> dwi(dw.wi[m - 1], nd * cout, nd * cin);
      ConstVecMap<T> xm(xr + size_t(lay.m_offset[m]) * cin, nd * cin);
      ConstVecMap<T> xp(xr + size_t(lay.m_offset[m] + nd) * cin, nd * cin);
      ConstVecMap<T> gm(gr + size_t(lay.m_offset[m]) * cout, nd * cout);
      ConstVecMap<T> gp(gr + size_t(lay.m_offset[m] + nd) * cout, nd * cout);
      VecMap<T> dxm(dxr + size_t(lay.m_offset[m]) * cin, nd * cin);
      VecMap<T> dxp(dxr + size_t(lay.m_offset[m] + nd) * cin, nd * cin);
      dxm += wr.transpose() * gm - wi.transpose() * gp;
      dxp += wr.transpose() * gp + wi.transpose() * gm;
      dwr += gm * xm.transpose() + gp * xp.transpose();
      dwi += gm * xp.transpose() - gp * xm.transpose();
    }
  }
}

template <typename T>
inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// Gated nonlinearity in the aligned order-major frame. Row 0 is the l = 0
// scalar of each channel: it passes through SiLU, and its sigmoid multiplies
// every other component of the same channel. If disabled the kernel is the
// identity (used by linear-gradient tests).
template <typename T>
void gate(const Tensor<T>& x, bool enabled, Tensor<T>& y) {
  y.require(x.n, x.h, x.c);
  if (!enabled) {
    y.v = x.v;
    return;
  }
  for (int i = 0; i < x.n; ++i) {
    const T* xr = x.row(i);
    T* yr = y.row(i);
    for (int cc = 0; cc < x.c; ++cc) {
      const T s = sigmoid(xr[cc]);
      yr[cc] = xr[cc] * s;
      for (int r = 1; r < x.h; ++r) yr[size_t(r) * x.c + cc] = xr[size_t(r) * x.c + cc] * s;
    }
  }
}

template <typename T>
void gate_backward(const Tensor<T>& x, bool enabled, const Tensor<T>& dy, Tensor<T>& dx) {
  if (!enabled) {
    for (size_t k = 0; k < dx.v.size(); ++k) dx.v[k] += dy.v[k];
    return;
  }
  for (int i = 0; i < x.n; ++i) {
    const T* xr = x.row(i);
    const T* gr = dy.row(i);
    T* dxr = dx.row(i);
    for (int cc = 0; cc < x.c; ++cc) {
      const T s = sigmoid(xr[cc]);
      const T ds = s * (T(1) - s);
      T acc = gr[cc] * (s + xr[cc] * ds);
      for (int r = 1; r < x.h; ++r) {
        const size_t k = size_t(r) * x.c + cc;
        dxr[k] += gr[k] * s;
        acc += gr[k] * xr[k] * ds;
      }
      dxr[cc] += acc;
    }
  }
}

}  // namespace esgnn::model::kernels
