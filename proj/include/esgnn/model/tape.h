// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "esgnn/model/params.h"
#include "esgnn/model/tensor.h"

namespace esgnn::model {

// Reverse-mode tape. Operations create result variables and record a closure
// that propagates gradients; backward() runs the closures in reverse order
// and then adds the gradients of adopted parameter variables back into their
// ParamStore entries.
template <typename T>
class Tape {
public:
  int create(Tensor<T> val) {
    const int id = static_cast<int>(vars_.size());
    vars_.push_back({std::move(val), Tensor<T>()});
    return id;
  }

  // Copies a parameter's current values onto the tape; gradients flow back
  // into entry.grad when backward() completes.
  int adopt(ParamEntry<T>& entry) {
    Tensor<T> t(1, entry.rows, entry.cols);
    t.v = entry.data;
    const int id = create(std::move(t));
    adopted_.emplace_back(id, &entry);
    return id;
  }

  Tensor<T>& val(int id) { return vars_[id].val; }
  const Tensor<T>& val(int id) const { return vars_[id].val; }

  Tensor<T>& grad(int id) {
    auto& v = vars_[id];
    if (v.grad.v.empty()) v.grad = Tensor<T>(v.val.n, v.val.h, v.val.c);
    return v.grad;
  }

  void record(std::function<void(Tape&)> op) { ops_.push_back(std::move(op)); }

  // Caller seeds output gradients first (via grad()).
  void backward() {
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)(*this);
    for (auto& [id, entry] : adopted_) {
      const auto& g = vars_[id].grad;
      if (g.v.empty()) continue;
      for (size_t k = 0; k < entry->grad.size(); ++k) entry->grad[k] += g.v[k];
    }
  }

  size_t n_vars() const { return vars_.size(); }

private:
  struct Var {
    Tensor<T> val, grad;
  };
  std::vector<Var> vars_;
  std::vector<std::function<void(Tape&)>> ops_;
  std::vector<std::pair<int, ParamEntry<T>*>> adopted_;
};

}  // namespace esgnn::model
