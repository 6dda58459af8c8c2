// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstring>
#include <string>
#include <vector>

#include "esgnn/core/error.h"

namespace esgnn::runtime {

struct TransportStats {
  long messages = 0;
  long bytes = 0;
};

// Point-to-point messaging between ranks. Sends are buffered and never block
// on the receiver; recv blocks until the matching (source, tag) message is
// in. Tags come from fresh_tag(), which every rank advances in lockstep, so
// a message can never be claimed by the wrong phase.
class Transport {
public:
  virtual ~Transport() = default;

  virtual int rank() const = 0;
  virtual int world_size() const = 0;

  void send(int dst, int tag, const void* data, size_t bytes) {
    ++stats_.messages;
    stats_.bytes += static_cast<long>(bytes);
    do_send(dst, tag, data, bytes);
  }

  virtual std::vector<char> recv(int src, int tag) = 0;

  int fresh_tag() { return next_tag_++; }

  // Fixed-width contribution from every rank, returned rank-major.
  std::vector<double> allgather(const std::vector<double>& mine) {
    const int tag = fresh_tag();
    const int w = world_size(), me = rank();
    const size_t n = mine.size();
    for (int p = 0; p < w; ++p)
      if (p != me) send(p, tag, mine.data(), n * sizeof(double));
    std::vector<double> out(n * size_t(w));
    std::copy(mine.begin(), mine.end(), out.begin() + n * size_t(me));
    for (int p = 0; p < w; ++p) {
      if (p == me) continue;
      const auto buf = recv(p, tag);
      if (buf.size() != n * sizeof(double))
        throw TransportError("allgather size mismatch from rank " + std::to_string(p));
      std::memcpy(out.data() + n * size_t(p), buf.data(), buf.size());
    }
    return out;
  }

  void barrier() {
    const int gather = fresh_tag();
    const int release = fresh_tag();
    const char token = 0;
    if (rank() == 0) {
      for (int p = 1; p < world_size(); ++p) recv(p, gather);
      for (int p = 1; p < world_size(); ++p) send(p, release, &token, 1);
    } else {
      send(0, gather, &token, 1);
      recv(0, release);
    }
  }

  const TransportStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }

protected:
  virtual void do_send(int dst, int tag, const void* data, size_t bytes) = 0;

private:
  TransportStats stats_;
  int next_tag_ = 0;
};

}  // namespace esgnn::runtime
