// SPDX-License-Identifier: Apache-2.0
#include "esgnn/runtime/tcp.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>

namespace esgnn::runtime {

namespace {

constexpr size_t kHeaderBytes = 16;  // u64 length + i32 rank + i32 tag

void store_u64(char* p, uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = char((v >> (8 * i)) & 0xff);
}
void store_i32(char* p, int32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = char((uint32_t(v) >> (8 * i)) & 0xff);
}

uint64_t load_u64(const char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(p[i])) << (8 * i);
  return v;
}
int32_t load_i32(const char* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(p[i])) << (8 * i);
  return int32_t(v);
}

void write_all(int fd, const char* data, size_t n) {
  size_t done = 0;
  while (done < n) {
    const ssize_t w = ::write(fd, data + done, n - done);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("socket write failed: ") + std::strerror(errno));
    }
    done += size_t(w);
  }
}

bool read_all(int fd, char* data, size_t n) {  // false on clean EOF at a frame edge
  size_t done = 0;
  while (done < n) {
    const ssize_t r = ::read(fd, data + done, n - done);
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    if (r == 0) return false;
    done += size_t(r);
  }
  return true;
}

sockaddr_in make_addr(const std::string& host, int port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(uint16_t(port));
  const std::string ip = host == "localhost" || host.empty() ? "127.0.0.1" : host;
  if (inet_pton(AF_INET, ip.c_str(), &addr.sin_addr) != 1)
    throw TransportError("cannot parse host address '" + host + "'");
  return addr;
}

void set_nodelay(int fd) {
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

TcpTransport::TcpTransport(int rank, int world, const std::string& host, int base_port)
    : rank_(rank), world_(world) {
  if (rank < 0 || world < 1 || rank >= world) throw UsageError("bad rank/world combination");
  peers_.resize(size_t(world));
  for (auto& p : peers_) p = std::make_unique<Peer>();
  if (world == 1) return;

  int listen_fd = -1;
  if (rank_ > 0) {  // ranks below me will dial in
    listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd < 0) throw TransportError("cannot create listen socket");
    int one = 1;
    setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(uint16_t(base_port + rank_));
    if (bind(listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(listen_fd);
      throw TransportError("cannot bind port " + std::to_string(base_port + rank_) + ": " +
                           std::strerror(errno));
    }
    if (listen(listen_fd, world) != 0) {
      ::close(listen_fd);
      throw TransportError("listen failed");
    }
  }

  // Dial every higher rank, retrying while it boots.
  for (int peer = rank_ + 1; peer < world_; ++peer) {
    const auto addr = make_addr(host, base_port + peer);
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
    int fd = -1;
    for (;;) {
      fd = ::socket(AF_INET, SOCK_STREAM, 0);
      if (fd < 0) throw TransportError("cannot create socket");
      if (connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) break;
      ::close(fd);
      fd = -1;
      if (std::chrono::steady_clock::now() > deadline)
        throw TransportError("cannot reach rank " + std::to_string(peer));
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    set_nodelay(fd);
    char ident[4];
    store_i32(ident, rank_);
    write_all(fd, ident, 4);
    peers_[peer]->fd = fd;
  }

  // Accept every lower rank.
  for (int n = 0; n < rank_; ++n) {
    const int fd = ::accept(listen_fd, nullptr, nullptr);
    if (fd < 0) {
      ::close(listen_fd);
      throw TransportError("accept failed");
    }
    set_nodelay(fd);
    char ident[4];
    if (!read_all(fd, ident, 4)) {
      ::close(fd);
      ::close(listen_fd);
      throw TransportError("peer hung up during identification");
    }
    const int peer = load_i32(ident);
    if (peer < 0 || peer >= rank_ || peers_[peer]->fd != -1) {
      ::close(fd);
      ::close(listen_fd);
      throw TransportError("bad peer identification " + std::to_string(peer));
    }
    peers_[peer]->fd = fd;
  }
  if (listen_fd >= 0) ::close(listen_fd);

  for (int p = 0; p < world_; ++p) {
    if (p == rank_) continue;
    Peer& peer = *peers_[p];
    peer.writer = std::thread([this, &peer] { writer_loop(peer); });
    peer.reader = std::thread([this, &peer] { reader_loop(peer); });
  }
}

TcpTransport::~TcpTransport() {
  for (auto& pp : peers_) {
    Peer& p = *pp;
    if (p.fd < 0) continue;
    {
      std::lock_guard<std::mutex> lk(p.out_m);
      p.closing = true;
    }
    p.out_cv.notify_all();
    if (p.writer.joinable()) p.writer.join();
    ::shutdown(p.fd, SHUT_RDWR);
    if (p.reader.joinable()) p.reader.join();
    ::close(p.fd);
  }
}

std::unique_ptr<TcpTransport> TcpTransport::from_env() {
  const char* rank = std::getenv("RANK");
  const char* world = std::getenv("WORLD_SIZE");
  const char* addr = std::getenv("MASTER_ADDR");
  const char* port = std::getenv("MASTER_PORT");
  if (!rank || !world || !port)
    throw UsageError("RANK, WORLD_SIZE, and MASTER_PORT must be set for tcp transport");
  return std::make_unique<TcpTransport>(std::atoi(rank), std::atoi(world),
                                        addr ? addr : "127.0.0.1", std::atoi(port));
}

void TcpTransport::do_send(int dst, int tag, const void* data, size_t bytes) {
  if (dst == rank_ || dst < 0 || dst >= world_) throw UsageError("bad send destination");
  Peer& p = *peers_[dst];
  std::vector<char> frame(kHeaderBytes + bytes);
  store_u64(frame.data(), uint64_t(bytes));
  store_i32(frame.data() + 8, rank_);
  store_i32(frame.data() + 12, tag);
  if (bytes > 0) std::memcpy(frame.data() + kHeaderBytes, data, bytes);
  {
    std::lock_guard<std::mutex> lk(p.out_m);
    if (p.closing) throw TransportError("transport is shutting down");
    p.outbox.push_back(std::move(frame));
  }
  p.out_cv.notify_all();
}

std::vector<char> TcpTransport::recv(int src, int tag) {
  if (src == rank_ || src < 0 || src >= world_) throw UsageError("bad receive source");
  Peer& p = *peers_[src];
  std::unique_lock<std::mutex> lk(p.in_m);
  p.in_cv.wait(lk, [&] {
    const auto it = p.inbox.find(tag);
    return (it != p.inbox.end() && !it->second.empty()) || p.eof;
  });
  const auto it = p.inbox.find(tag);
  if (it == p.inbox.end() || it->second.empty())
    throw TransportError("rank " + std::to_string(src) + " closed before tag " +
                         std::to_string(tag) + " arrived");
  std::vector<char> msg = std::move(it->second.front());
  it->second.pop_front();
  if (it->second.empty()) p.inbox.erase(it);
  return msg;
}

void TcpTransport::writer_loop(Peer& p) {
  for (;;) {
    std::vector<char> frame;
    {
      std::unique_lock<std::mutex> lk(p.out_m);
      p.out_cv.wait(lk, [&] { return p.closing || !p.outbox.empty(); });
      if (p.outbox.empty()) return;  // closing and drained
      frame = std::move(p.outbox.front());
      p.outbox.pop_front();
    }
    write_all(p.fd, frame.data(), frame.size());
  }
}

void TcpTransport::reader_loop(Peer& p) {
  for (;;) {
    char header[kHeaderBytes];
    if (!read_all(p.fd, header, kHeaderBytes)) break;
    const uint64_t bytes = load_u64(header);
    const int tag = load_i32(header + 12);
    std::vector<char> payload(bytes);
    if (bytes > 0 && !read_all(p.fd, payload.data(), bytes)) break;
    {
      std::lock_guard<std::mutex> lk(p.in_m);
      p.inbox[tag].push_back(std::move(payload));
    }
    p.in_cv.notify_all();
  }
  {
    std::lock_guard<std::mutex> lk(p.in_m);
    p.eof = true;
  }
  p.in_cv.notify_all();
}

}  // namespace esgnn::runtime
