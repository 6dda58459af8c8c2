// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "esgnn/model/network.h"
#include "esgnn/model/optimizer.h"
#include "esgnn/runtime/comm_plan.h"
#include "esgnn/runtime/transport.h"

namespace esgnn::runtime {

// Wall-clock samples per (layer, phase); phases are pack, sendrecv, unpack
// for halo traffic and compute for everything between exchanges.
struct PhaseLog {
  struct Row {
    int rank;
    int layer;
    std::string phase;
    double seconds;
  };
  std::vector<Row> rows;

  void add(int rank, int layer, const char* phase, double seconds) {
    rows.push_back({rank, layer, phase, seconds});
  }

  std::string csv() const {
    std::ostringstream out;
    out << "rank,layer,phase,seconds\n";
    for (const auto& r : rows)
      out << r.rank << ',' << r.layer << ',' << r.phase << ',' << r.seconds << '\n';
    return out.str();
  }
};

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace detail

// Refreshes the halo rows of the node variable in place and records the
// reverse route: at backward time halo gradients travel to their owners and
// add into the owned rows there, then are cleared locally so upstream ops
// never see gradients for values this rank did not produce.
template <typename T>
void exchange_halo(model::Tape<T>& tape, int node_var, const CommPlan& plan, Transport& tr,
                   PhaseLog* log, int layer) {
  auto& x = tape.val(node_var);
  x.require(plan.view.n_rows, x.h, x.c);
  const size_t row_len = size_t(x.h) * x.c;
  const int tag = tr.fresh_tag();

  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::vector<T>> outbound(plan.neighbors.size());
  for (size_t nb = 0; nb < plan.neighbors.size(); ++nb) {
    const auto& nl = plan.neighbors[nb];
    outbound[nb].resize(nl.send_rows.size() * row_len);
    T* at = outbound[nb].data();
    for (int row : nl.send_rows) {
      std::memcpy(at, x.row(row), row_len * sizeof(T));
      at += row_len;
    }
  }
  const double pack_s = detail::seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  for (size_t nb = 0; nb < plan.neighbors.size(); ++nb)
    tr.send(plan.neighbors[nb].peer, tag, outbound[nb].data(),
            outbound[nb].size() * sizeof(T));
  std::vector<std::vector<char>> inbound(plan.neighbors.size());
  for (size_t nb = 0; nb < plan.neighbors.size(); ++nb) {
    inbound[nb] = tr.recv(plan.neighbors[nb].peer, tag);
    if (inbound[nb].size() != size_t(plan.neighbors[nb].recv_count) * row_len * sizeof(T))
      throw TransportError("halo payload size mismatch from rank " +
                           std::to_string(plan.neighbors[nb].peer));
  }
  const double comm_s = detail::seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  for (size_t nb = 0; nb < plan.neighbors.size(); ++nb) {
    const auto& nl = plan.neighbors[nb];
    if (nl.recv_count > 0)
      std::memcpy(x.row(nl.recv_row), inbound[nb].data(), inbound[nb].size());
  }
  const double unpack_s = detail::seconds_since(t0);
  if (log) {
    log->add(tr.rank(), layer, "pack", pack_s);
    log->add(tr.rank(), layer, "sendrecv", comm_s);
    log->add(tr.rank(), layer, "unpack", unpack_s);
  }

  const CommPlan* plan_p = &plan;
  Transport* tr_p = &tr;
  tape.record([node_var, plan_p, tr_p, row_len](model::Tape<T>& t) {
    auto& g = t.grad(node_var);
    const int back_tag = tr_p->fresh_tag();
    std::vector<std::vector<T>> grads_out(plan_p->neighbors.size());
    for (size_t nb = 0; nb < plan_p->neighbors.size(); ++nb) {
      const auto& nl = plan_p->neighbors[nb];
      grads_out[nb].resize(size_t(nl.recv_count) * row_len);
      if (nl.recv_count > 0) {
        std::memcpy(grads_out[nb].data(), g.row(nl.recv_row),
                    grads_out[nb].size() * sizeof(T));
        std::memset(g.row(nl.recv_row), 0, grads_out[nb].size() * sizeof(T));
      }
    }
    for (size_t nb = 0; nb < plan_p->neighbors.size(); ++nb)
      tr_p->send(plan_p->neighbors[nb].peer, back_tag, grads_out[nb].data(),
                 grads_out[nb].size() * sizeof(T));
    for (size_t nb = 0; nb < plan_p->neighbors.size(); ++nb) {
      const auto& nl = plan_p->neighbors[nb];
      const auto buf = tr_p->recv(nl.peer, back_tag);
      if (buf.size() != nl.send_rows.size() * row_len * sizeof(T))
        throw TransportError("halo gradient size mismatch from rank " +
                             std::to_string(nl.peer));
      const T* at = reinterpret_cast<const T*>(buf.data());
      for (int row : nl.send_rows) {
        T* dst = g.row(row);
        for (size_t k = 0; k < row_len; ++k) dst[k] += at[k];
        at += row_len;
      }
    }
  });
}

// All ranks contribute their hash; any mismatch means the replicas have
// drifted apart and continuing would silently corrupt training.
template <typename T>
void check_param_sync(const model::ParamStore<T>& store, Transport& tr, const char* where) {
  const uint64_t h = store.value_hash();
  const std::vector<double> mine = {double(h >> 32), double(h & 0xffffffffULL)};
  const auto all = tr.allgather(mine);
  for (int p = 0; p < tr.world_size(); ++p)
    if (all[2 * p] != mine[0] || all[2 * p + 1] != mine[1])
      throw DivergenceError(std::string("parameter state diverged between ranks (") + where +
                            ")");
}

// Sums parameter gradients across ranks, accumulating in double and in rank
// order so every rank lands on bit-identical totals.
template <typename T>
void allreduce_gradients(model::ParamStore<T>& store, Transport& tr) {
  std::vector<double> mine;
  mine.reserve(store.n_scalars());
  for (int e = 0; e < store.n_entries(); ++e)
    for (T gv : store.entry(e).grad) mine.push_back(double(gv));
  const auto all = tr.allgather(mine);
  const size_t n = mine.size();
  size_t k = 0;
  for (int e = 0; e < store.n_entries(); ++e)
    for (auto& gv : store.entry(e).grad) {
      double acc = 0.0;
      for (int p = 0; p < tr.world_size(); ++p) acc += all[size_t(p) * n + k];
      gv = static_cast<T>(acc);
      ++k;
    }
}

// Sum of per-rank masked-element counts; fixed for a given target set.
inline long allreduce_count(long local, Transport& tr) {
  const auto all = tr.allgather({double(local)});
  long total = 0;
  for (double v : all) total += static_cast<long>(v);
  return total;
}

template <typename T>
struct StepResult {
  double loss = 0.0;
  model::ops::LossPartials local;
};

// Drives one rank's replica: every rank holds the full parameter set and its
// slice of the graph; forwards interleave halo refreshes, training steps end
// in a gradient allreduce so the replicas move together.
template <typename T>
class DistributedRunner {
public:
  DistributedRunner(model::Network<T>& net, CommPlan plan, Transport& tr, PhaseLog* log = nullptr)
      : net_(&net), plan_(std::move(plan)), tr_(&tr), log_(log) {}

  const CommPlan& plan() const { return plan_; }
  long exchange_calls() const { return exchange_calls_; }

  model::Prepared<T> prepare() const { return net_->prepare(plan_.view); }

  model::ForwardVars forward(model::Tape<T>& tape, const model::Prepared<T>& prep) {
    int call = 0;
    auto t0 = std::chrono::steady_clock::now();
    auto hook = [this, &call, &t0](model::Tape<T>& t, int node_var) {
      if (log_) log_->add(tr_->rank(), call / 2, "compute", detail::seconds_since(t0));
      exchange_halo(t, node_var, plan_, *tr_, log_, call / 2);
      ++exchange_calls_;
      ++call;
      t0 = std::chrono::steady_clock::now();
    };
    auto out = net_->build_forward(tape, prep, hook);
    if (log_) log_->add(tr_->rank(), last_layer(call), "compute", detail::seconds_since(t0));
    return out;
  }

  StepResult<T> train_step(const model::Prepared<T>& prep,
                           const model::TargetBuffers<T>& targets, long n_total,
                           model::Optimizer<T>& opt) {
    check_param_sync(net_->params(), *tr_, "before step");
    net_->params().zero_grad();
    model::Tape<T> tape;
    auto fwd = forward(tape, prep);
    StepResult<T> res;
    res.local = net_->record_loss(tape, fwd, targets, n_total);
    const auto sums =
        tr_->allgather({res.local.sum_abs, res.local.sum_sq, double(res.local.count)});
    double sum_abs = 0.0, sum_sq = 0.0;
    long count = 0;
    for (int p = 0; p < tr_->world_size(); ++p) {
      sum_abs += sums[3 * p];
      sum_sq += sums[3 * p + 1];
      count += static_cast<long>(sums[3 * p + 2]);
    }
    if (count != n_total)
      throw DataError("target count mismatch: " + std::to_string(count) + " vs " +
                      std::to_string(n_total));
    res.loss = (sum_abs + sum_sq) / double(n_total);
    tape.backward();
    allreduce_gradients(net_->params(), *tr_);
    opt.step(res.loss);
    check_param_sync(net_->params(), *tr_, "after update");
    return res;
  }

private:
  int last_layer(int calls) const { return calls > 0 ? (calls - 1) / 2 : 0; }

  model::Network<T>* net_;
  CommPlan plan_;
  Transport* tr_;
  PhaseLog* log_;
  long exchange_calls_ = 0;
};

}  // namespace esgnn::runtime
