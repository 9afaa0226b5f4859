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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "elephantdp/codec.hpp"
#include "elephantdp/scm.hpp"

namespace elephantdp {

// Wire protocol for the SCM: length-prefixed canonical-encoded request and
// reply messages over a byte stream. The in-simulation transport and the
// loopback TCP transport run the identical encoding, differing only in how
// the frames move.

inline constexpr uint8_t kScmWireInit = 0x01;
inline constexpr uint8_t kScmWireGet = 0x02;
inline constexpr uint8_t kScmWireUpdate = 0x03;

// Reply status codes. Protocol rejections travel as signed Ack/Error replies;
// these distinguish the reply shape and the unsigned environment failures.
inline constexpr uint8_t kScmWireStateReply = 0x01;
inline constexpr uint8_t kScmWireAckReply = 0x02;
inline constexpr uint8_t kScmWireNotInitialized = 0x03;
inline constexpr uint8_t kScmWireAlreadyInitialized = 0x04;
inline constexpr uint8_t kScmWireNoQuorum = 0x05;

struct ScmRequest {
  uint8_t type = kScmWireGet;
  Nonce nonce;
  uint64_t id = 0;  // kScmWireUpdate only
  Bytes newstate;   // kScmWireInit / kScmWireUpdate
};

inline Bytes encode_scm_request(const ScmRequest& req) {
  Writer w;
  w.u8(req.type);
  w.raw(req.nonce.value.data(), req.nonce.value.size());
  if (req.type == kScmWireInit) {
    w.bytes(req.newstate);
  } else if (req.type == kScmWireUpdate) {
    w.u64(req.id);
    w.bytes(req.newstate);
  }
  return w.take();
}

inline ScmRequest decode_scm_request(const Bytes& in) {
  Reader r(in);
  ScmRequest req;
  req.type = r.u8();
  Bytes nonce = r.raw(req.nonce.value.size());
  std::copy(nonce.begin(), nonce.end(), req.nonce.value.begin());
  if (req.type == kScmWireInit) {
    req.newstate = r.bytes();
  } else if (req.type == kScmWireUpdate) {
    req.id = r.u64();
    req.newstate = r.bytes();
  } else if (req.type != kScmWireGet) {
    throw CodecError("unknown SCM request type");
  }
  r.expect_done();
  return req;
}

inline Bytes encode_scm_reply(const ScmReply& reply) {
  Writer w;
  if (reply.state_reply) {
    w.u8(kScmWireStateReply);
    w.u64(reply.id);
    w.bytes(reply.curstate);
  } else {
    w.u8(kScmWireAckReply);
    w.u8(reply.msg);
  }
  w.raw(reply.nonce_echo.value.data(), reply.nonce_echo.value.size());
  w.raw(reply.sig.data(), reply.sig.size());
  return w.take();
}

inline Bytes encode_scm_error(uint8_t status) {
  Writer w;
  w.u8(status);
  return w.take();
}

// Decodes a reply frame; rethrows transported environment failures.
inline ScmReply decode_scm_reply(const Bytes& in) {
  Reader r(in);
  uint8_t status = r.u8();
  switch (status) {
    case kScmWireNotInitialized: throw NotInitializedError();
    case kScmWireAlreadyInitialized: throw AlreadyInitializedError();
    case kScmWireNoQuorum: throw NoQuorumError();
    default: break;
  }
  ScmReply reply;
  if (status == kScmWireStateReply) {
    reply.state_reply = true;
    reply.id = r.u64();
    reply.curstate = r.bytes();
  } else if (status == kScmWireAckReply) {
    reply.state_reply = false;
    reply.msg = r.u8();
  } else {
    throw CodecError("unknown SCM reply status");
  }
  Bytes nonce = r.raw(reply.nonce_echo.value.size());
  std::copy(nonce.begin(), nonce.end(), reply.nonce_echo.value.begin());
  Bytes sig = r.raw(reply.sig.size());
  std::copy(sig.begin(), sig.end(), reply.sig.begin());
  r.expect_done();
  return reply;
}

// One request frame in, one reply frame out; shared by every transport.
inline Bytes dispatch_scm_frame(ScmHandle& backend, const Bytes& frame) {
  try {
    ScmRequest req = decode_scm_request(frame);
    switch (req.type) {
      case kScmWireInit: return encode_scm_reply(backend.init_state(req.nonce, req.newstate));
      case kScmWireGet: return encode_scm_reply(backend.get_state(req.nonce));
      default: return encode_scm_reply(backend.update_state(req.nonce, req.id, req.newstate));
    }
  } catch (const NotInitializedError&) {
    return encode_scm_error(kScmWireNotInitialized);
  } catch (const AlreadyInitializedError&) {
    return encode_scm_error(kScmWireAlreadyInitialized);
  } catch (const NoQuorumError&) {
    return encode_scm_error(kScmWireNoQuorum);
  }
}

// In-simulation transport: the frames take a function call instead of a
// socket.
class ScmCodecClient : public ScmHandle {
 public:
  explicit ScmCodecClient(ScmHandle& backend) : backend_(backend) {}

  ScmReply init_state(const Nonce& nonce, const Bytes& newstate) override {
    return round_trip({kScmWireInit, nonce, 0, newstate});
  }
  ScmReply get_state(const Nonce& nonce) override { return round_trip({kScmWireGet, nonce, 0, {}}); }
  ScmReply update_state(const Nonce& nonce, uint64_t id, const Bytes& newstate) override {
    return round_trip({kScmWireUpdate, nonce, id, newstate});
  }
  VerifyKey verify_key() const override { return backend_.verify_key(); }

 private:
  ScmReply round_trip(const ScmRequest& req) {
    return decode_scm_reply(dispatch_scm_frame(backend_, encode_scm_request(req)));
  }

  ScmHandle& backend_;
};

namespace detail {

inline void write_all(int fd, const uint8_t* data, size_t n) {
  while (n > 0) {
    ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w <= 0) throw std::runtime_error("socket write failed");
    data += w;
    n -= static_cast<size_t>(w);
  }
}

inline bool read_exact(int fd, uint8_t* data, size_t n) {
  while (n > 0) {
    ssize_t r = ::recv(fd, data, n, 0);
    if (r == 0) return false;  // orderly shutdown
    if (r < 0) throw std::runtime_error("socket read failed");
    data += r;
    n -= static_cast<size_t>(r);
  }
  return true;
}

inline void write_frame(int fd, const Bytes& payload) {
  uint8_t len[4];
  uint32_t n = static_cast<uint32_t>(payload.size());
  for (int i = 0; i < 4; ++i) len[i] = static_cast<uint8_t>(n >> (8 * i));
  write_all(fd, len, 4);
  write_all(fd, payload.data(), payload.size());
}

inline bool read_frame(int fd, Bytes& out) {
  uint8_t len[4];
  if (!read_exact(fd, len, 4)) return false;
  uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n |= static_cast<uint32_t>(len[i]) << (8 * i);
  out.resize(n);
  return n == 0 || read_exact(fd, out.data(), n);
}

}  // namespace detail

// Loopback TCP server fronting any ScmHandle. Connections are served one at
// a time; each carries a stream of request frames.
class ScmTcpServer {
 public:
  explicit ScmTcpServer(ScmHandle& backend) : backend_(backend) {
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

  ~ScmTcpServer() { stop(); }

  uint16_t port() const { return port_; }

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
      int rc = ::poll(&pfd, 1, 200);
      if (rc <= 0) continue;
      int conn = ::accept(listen_fd_, nullptr, nullptr);
      if (conn < 0) continue;
      conn_fd_.store(conn);
      try {
        Bytes frame;
        while (!stopping_.load() && detail::read_frame(conn, frame)) {
          detail::write_frame(conn, dispatch_scm_frame(backend_, frame));
        }
      } catch (const std::exception&) {
        // drop the connection; the client sees a transport failure
      }
      conn_fd_.store(-1);
      ::close(conn);
    }
  }

  ScmHandle& backend_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<int> conn_fd_{-1};
  std::thread thread_;
};

// TCP client side of the same framing; one persistent connection.
class ScmTcpClient : public ScmHandle {
 public:
  ScmTcpClient(uint16_t port, VerifyKey vk_scm) : vk_(vk_scm) {
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

  ~ScmTcpClient() override {
    if (fd_ >= 0) ::close(fd_);
  }

  ScmReply init_state(const Nonce& nonce, const Bytes& newstate) override {
    return round_trip({kScmWireInit, nonce, 0, newstate});
  }
  ScmReply get_state(const Nonce& nonce) override { return round_trip({kScmWireGet, nonce, 0, {}}); }
  ScmReply update_state(const Nonce& nonce, uint64_t id, const Bytes& newstate) override {
    return round_trip({kScmWireUpdate, nonce, id, newstate});
  }
  VerifyKey verify_key() const override { return vk_; }

 private:
  ScmReply round_trip(const ScmRequest& req) {
    std::lock_guard lock(mu_);
    detail::write_frame(fd_, encode_scm_request(req));
    Bytes reply;
    if (!detail::read_frame(fd_, reply)) throw std::runtime_error("SCM connection closed");
    return decode_scm_reply(reply);
  }

  VerifyKey vk_;
  int fd_ = -1;
  std::mutex mu_;
};

}  // namespace elephantdp
