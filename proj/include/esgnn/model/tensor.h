// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "esgnn/core/error.h"

namespace esgnn::model {

// Dense (n, h, c) array, row-major with c fastest. For embeddings n indexes
// nodes or edges, h the (l, m) harmonic components, c the channels. Weight
// matrices use n = 1 with (h, c) = (rows, cols).
template <typename T>
struct Tensor {
  int n = 0, h = 0, c = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int n_, int h_, int c_) : n(n_), h(h_), c(c_), v(size_t(n_) * h_ * c_) {}

  size_t size() const { return v.size(); }
  T* row(int i) { return v.data() + size_t(i) * h * c; }
  const T* row(int i) const { return v.data() + size_t(i) * h * c; }
  T& at(int i, int hh, int cc) { return v[(size_t(i) * h + hh) * c + cc]; }
  T at(int i, int hh, int cc) const { return v[(size_t(i) * h + hh) * c + cc]; }

  void require(int n_, int h_, int c_) const {
    if (n != n_ || h != h_ || c != c_) throw ShapeError("tensor shape mismatch");
  }
};

}  // namespace esgnn::model
