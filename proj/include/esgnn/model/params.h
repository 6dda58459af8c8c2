// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "esgnn/core/error.h"
#include "esgnn/model/tensor.h"

namespace esgnn::model {

template <typename T>
struct ParamEntry {
  std::string name;
  int rows = 1, cols = 1;
  int fan_in = 1;
  std::vector<T> data;
  std::vector<T> grad;

  size_t count() const { return data.size(); }
};

inline uint64_t fnv1a(const void* bytes, size_t n, uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

// Named parameters in registration order. Initialization is seeded per entry
// name, so the values do not depend on the order entries were added in.
template <typename T>
class ParamStore {
public:
  ParamEntry<T>& add(const std::string& name, int rows, int cols, int fan_in) {
    if (index_.count(name)) throw ShapeError("duplicate parameter: " + name);
    auto e = std::make_unique<ParamEntry<T>>();
    e->name = name;
    e->rows = rows;
    e->cols = cols;
    e->fan_in = fan_in;
    e->data.assign(size_t(rows) * cols, T(0));
    e->grad.assign(size_t(rows) * cols, T(0));
    index_[name] = static_cast<int>(entries_.size());
    entries_.push_back(std::move(e));
    return *entries_.back();
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  ParamEntry<T>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ShapeError("unknown parameter: " + name);
    return *entries_[it->second];
  }
  const ParamEntry<T>& at(const std::string& name) const {
    return const_cast<ParamStore*>(this)->at(name);
  }

  int n_entries() const { return static_cast<int>(entries_.size()); }
  ParamEntry<T>& entry(int i) { return *entries_[i]; }
  const ParamEntry<T>& entry(int i) const { return *entries_[i]; }

  size_t n_scalars() const {
    size_t n = 0;
    for (const auto& e : entries_) n += e->count();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_)
      std::fill(e->grad.begin(), e->grad.end(), T(0));
  }

  // Uniform in +-sqrt(6 / fan_in), one generator per entry seeded from the
  // global seed and the entry name: insertion order cannot change values.
  void init(uint64_t seed) {
    for (auto& e : entries_) {
      const uint64_t h = fnv1a(e->name.data(), e->name.size(), seed ^ 0x9e3779b97f4a7c15ull);
      std::mt19937_64 rng(h);
      const double bound = std::sqrt(6.0 / e->fan_in);
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (auto& x : e->data) x = static_cast<T>(dist(rng));
    }
  }

  // Order-independent digest of all parameter values, for cross-rank checks.
  uint64_t value_hash() const {
    uint64_t h = 1469598103934665603ull;
    for (const auto& e : entries_) {
      h = fnv1a(e->name.data(), e->name.size(), h);
      h = fnv1a(e->data.data(), e->data.size() * sizeof(T), h);
    }
    return h;
  }

private:
  std::vector<std::unique_ptr<ParamEntry<T>>> entries_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace esgnn::model
