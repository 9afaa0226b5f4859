// Copyright 2026 The ElephantDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <mutex>
#include <vector>

#include "elephantdp/codec.hpp"
#include "elephantdp/query.hpp"
#include "elephantdp/scm_wire.hpp"

namespace elephantdp {

// What a TEE sends the analyst for each accounted query.
struct AnalystTuple {
  uint64_t id = 0;
  Query q;
  Answer a;
};

inline Bytes encode_analyst_tuple(const AnalystTuple& t) {
  Writer w;
  w.u64(t.id);
  w.bytes(t.q.encode());
  t.a.encode_to(w);
  return w.take();
}

inline AnalystTuple decode_analyst_tuple(const Bytes& in) {
  Reader r(in);
  AnalystTuple t;
  t.id = r.u64();
  t.q = Query::decode(r.bytes());
  t.a = Answer::decode_from(r);
  r.expect_done();
  return t;
}

class AnalystSink {
 public:
  virtual ~AnalystSink() = default;
  virtual void deliver(const Bytes& canonical_tuple) = 0;
};

// In-simulation analyst channel: a message queue the driver inspects.
class AnalystLog : public AnalystSink {
 public:
  void deliver(const Bytes& canonical_tuple) override {
    std::lock_guard lock(mu_);
    raw_.push_back(canonical_tuple);
    tuples_.push_back(decode_analyst_tuple(canonical_tuple));
  }

  std::vector<AnalystTuple> tuples() const {
    std::lock_guard lock(mu_);
    return tuples_;
  }

  std::vector<Bytes> raw() const {
    std::lock_guard lock(mu_);
    return raw_;
  }

  size_t size() const {
    std::lock_guard lock(mu_);
    return tuples_.size();
  }

  // The most recent tuple, if any.
  std::optional<AnalystTuple> last() const {
    std::lock_guard lock(mu_);
    if (tuples_.empty()) return std::nullopt;
    return tuples_.back();
  }

 private:
  mutable std::mutex mu_;
  std::vector<Bytes> raw_;
  std::vector<AnalystTuple> tuples_;
};

// Loopback TCP variant of the analyst channel; same tuple encoding, framed
// like the SCM wire protocol.
class AnalystTcpCollector {
 public:
  AnalystTcpCollector() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listen_fd_, 8) != 0) {
      ::close(listen_fd_);
      throw std::runtime_error("bind/listen failed");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { serve(); });
  }

  ~AnalystTcpCollector() { stop(); }

  uint16_t port() const { return port_; }
  const AnalystLog& log() const { return log_; }

  void stop() {
    bool expected = false;
    if (!stopping_.compare_exchange_strong(expected, true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    int conn = conn_fd_.exchange(-1);
    if (conn >= 0) ::shutdown(conn, SHUT_RDWR);  // unblock a pending recv
    ::close(listen_fd_);
    if (thread_.joinable()) thread_.join();
  }

 private:
  void serve() {
    while (!stopping_.load()) {
      pollfd pfd{listen_fd_, POLLIN, 0};
      if (::poll(&pfd, 1, 200) <= 0) continue;
      int conn = ::accept(listen_fd_, nullptr, nullptr);
      if (conn < 0) continue;
      conn_fd_.store(conn);
      try {
        Bytes frame;
        while (!stopping_.load() && detail::read_frame(conn, frame)) log_.deliver(frame);
      } catch (const std::exception&) {
      }
      conn_fd_.store(-1);
      ::close(conn);
    }
  }

  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<int> conn_fd_{-1};
  std::thread thread_;
  AnalystLog log_;
};

class AnalystTcpSink : public AnalystSink {
 public:
  explicit AnalystTcpSink(uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(fd_);
      throw std::runtime_error("connect() failed");
    }
  }

  ~AnalystTcpSink() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void deliver(const Bytes& canonical_tuple) override {
    std::lock_guard lock(mu_);
    detail::write_frame(fd_, canonical_tuple);
  }

 private:
  int fd_ = -1;
  std::mutex mu_;
};

}  // namespace elephantdp
