// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "esgnn/runtime/transport.h"

namespace esgnn::runtime {

// Full-mesh TCP transport. Rank r listens on base_port + r; every lower rank
// dials it and identifies itself with a 4-byte rank header. Each live socket
// gets a writer thread draining an outbox and a reader thread sorting frames
// into per-tag inboxes, so sends never block on a slow receiver.
//
// Frame layout, little endian: u64 payload bytes, i32 sender rank, i32 tag,
// then the payload.
class TcpTransport : public Transport {
public:
  TcpTransport(int rank, int world, const std::string& host, int base_port);
  ~TcpTransport() override;

  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  // Reads RANK, WORLD_SIZE, MASTER_ADDR, MASTER_PORT.
  static std::unique_ptr<TcpTransport> from_env();

  int rank() const override { return rank_; }
  int world_size() const override { return world_; }
  std::vector<char> recv(int src, int tag) override;

protected:
  void do_send(int dst, int tag, const void* data, size_t bytes) override;

private:
  struct Peer {
    int fd = -1;
    std::thread writer;
    std::mutex out_m;
    std::condition_variable out_cv;
    std::deque<std::vector<char>> outbox;  // pre-framed
    bool closing = false;

    std::thread reader;
    std::mutex in_m;
    std::condition_variable in_cv;
    std::map<int, std::deque<std::vector<char>>> inbox;
    bool eof = false;
  };

  void writer_loop(Peer& p);
  void reader_loop(Peer& p);

  int rank_ = 0;
  int world_ = 1;
  std::vector<std::unique_ptr<Peer>> peers_;  // index by rank; self unused
};

}  // namespace esgnn::runtime
