// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "esgnn/model/params.h"

namespace esgnn::model {

// Adam with a reduce-on-plateau learning-rate rule: when the loss has not
// improved relatively by `threshold` for `patience` steps, the rate is
// multiplied by `factor`. Moments are kept in double so single-precision
// runs update deterministically.
struct OptimizerConfig {
  double lr = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int patience = 100;
  double factor = 0.5;
  double threshold = 1e-4;
  double min_lr = 1e-6;
};

template <typename T>
class Optimizer {
public:
  Optimizer(ParamStore<T>& store, OptimizerConfig cfg = {}) : store_(&store), cfg_(cfg) {
    m_.resize(store.n_entries());
    v_.resize(store.n_entries());
    for (int i = 0; i < store.n_entries(); ++i) {
      m_[i].assign(store.entry(i).count(), 0.0);
      v_[i].assign(store.entry(i).count(), 0.0);
    }
  }

  double lr() const { return lr_ < 0 ? cfg_.lr : lr_; }
  long steps() const { return t_; }

  void step(double loss) {
    if (lr_ < 0) lr_ = cfg_.lr;
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (int i = 0; i < store_->n_entries(); ++i) {
      auto& e = store_->entry(i);
      for (size_t k = 0; k < e.count(); ++k) {
        const double g = double(e.grad[k]);
        m_[i][k] = cfg_.beta1 * m_[i][k] + (1.0 - cfg_.beta1) * g;
        v_[i][k] = cfg_.beta2 * v_[i][k] + (1.0 - cfg_.beta2) * g * g;
        const double mh = m_[i][k] / bc1;
        const double vh = v_[i][k] / bc2;
        e.data[k] = static_cast<T>(double(e.data[k]) - lr_ * mh / (std::sqrt(vh) + cfg_.eps));
      }
    }
    observe(loss);
  }

private:
  void observe(double loss) {
    if (loss < best_ * (1.0 - cfg_.threshold)) {
      best_ = loss;
      stale_ = 0;
    } else {
      if (++stale_ >= cfg_.patience) {
        lr_ = std::max(cfg_.min_lr, lr_ * cfg_.factor);
        stale_ = 0;
      }
    }
  }

  ParamStore<T>* store_;
  OptimizerConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  double lr_ = -1.0;
  long t_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  int stale_ = 0;
};

}  // namespace esgnn::model
