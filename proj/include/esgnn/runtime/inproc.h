// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "esgnn/runtime/transport.h"

namespace esgnn::runtime {

// Shared-memory mesh for ranks running as threads of one process. Each
// (src, dst) pair has its own tagged mailbox. An optional artificial delay
// jitters message arrival to shake out ordering assumptions in tests.
class InprocWorld {
public:
  explicit InprocWorld(int n, int max_delay_us = 0, uint64_t delay_seed = 1)
      : n_(n), max_delay_us_(max_delay_us), delay_seed_(delay_seed) {
    boxes_.resize(size_t(n) * n);
    for (auto& b : boxes_) b = std::make_unique<Mailbox>();
  }

  int size() const { return n_; }

private:
  friend class InprocTransport;

  struct Mailbox {
    std::mutex m;
    std::condition_variable cv;
    std::map<int, std::deque<std::vector<char>>> by_tag;
  };

  Mailbox& box(int src, int dst) { return *boxes_[size_t(src) * n_ + dst]; }

  int n_;
  int max_delay_us_;
  uint64_t delay_seed_;
  std::vector<std::unique_ptr<Mailbox>> boxes_;
};

class InprocTransport : public Transport {
public:
  InprocTransport(InprocWorld& world, int rank)
      : world_(&world), rank_(rank), rng_(world.delay_seed_ ^ (uint64_t(rank) << 32)) {}

  int rank() const override { return rank_; }
  int world_size() const override { return world_->size(); }

  std::vector<char> recv(int src, int tag) override {
    auto& b = world_->box(src, rank_);
    std::unique_lock<std::mutex> lk(b.m);
    b.cv.wait(lk, [&] {
      const auto it = b.by_tag.find(tag);
      return it != b.by_tag.end() && !it->second.empty();
    });
    auto it = b.by_tag.find(tag);
    std::vector<char> msg = std::move(it->second.front());
    it->second.pop_front();
    if (it->second.empty()) b.by_tag.erase(it);
    return msg;
  }

protected:
  void do_send(int dst, int tag, const void* data, size_t bytes) override {
    if (world_->max_delay_us_ > 0) {
      std::uniform_int_distribution<int> d(0, world_->max_delay_us_);
      std::this_thread::sleep_for(std::chrono::microseconds(d(rng_)));
    }
    auto& b = world_->box(rank_, dst);
    std::vector<char> msg(bytes);
    std::memcpy(msg.data(), data, bytes);
    {
      std::lock_guard<std::mutex> lk(b.m);
      b.by_tag[tag].push_back(std::move(msg));
    }
    b.cv.notify_all();
  }

private:
  InprocWorld* world_;
  int rank_;
  std::mt19937_64 rng_;
};

}  // namespace esgnn::runtime
