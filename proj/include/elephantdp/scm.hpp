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

#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "elephantdp/bytes.hpp"
#include "elephantdp/codec.hpp"
#include "elephantdp/crypto.hpp"
#include "elephantdp/trace.hpp"

namespace elephantdp {

// The state continuity module: an atomic, signed, monotone (id, state)
// register. It accepts an update only for the successor counter value and
// signs every reply together with the caller's nonce. It deliberately does
// not authenticate callers; bogus updates surface downstream when the digest
// fails verification under vk_s.

struct NotInitializedError : std::runtime_error {
  NotInitializedError() : std::runtime_error("SCM not initialized") {}
};
struct AlreadyInitializedError : std::runtime_error {
  AlreadyInitializedError() : std::runtime_error("SCM already initialized") {}
};
struct NoQuorumError : std::runtime_error {
  NoQuorumError() : std::runtime_error("SCM quorum unreachable") {}
};

inline constexpr uint8_t kScmAckMsg = 1;
inline constexpr uint8_t kScmErrorMsg = 0;

struct ScmKeys {
  SigningKey sk;
  VerifyKey vk;

  static ScmKeys generate() {
    auto [sk, vk] = generate_signing_keypair();
    return {sk, vk};
  }
};

// Signed reply to any of the three operations. State replies (InitState,
// GetState) carry (id, curstate); update replies carry Ack or Error. The
// reply echoes the caller's nonce so a replay from another epoch is
// detectable.
struct ScmReply {
  bool state_reply = true;
  uint64_t id = 0;
  Bytes curstate;
  uint8_t msg = kScmErrorMsg;
  Nonce nonce_echo;
  Signature sig{};
};

inline Bytes scm_state_payload(uint64_t id, const Bytes& curstate, const Nonce& nonce) {
  Writer w;
  w.u64(id);
  w.bytes(curstate);
  w.raw(nonce.value.data(), nonce.value.size());
  return w.take();
}

inline Bytes scm_ack_payload(uint8_t msg, const Nonce& nonce) {
  Writer w;
  w.u8(msg);
  w.raw(nonce.value.data(), nonce.value.size());
  return w.take();
}

enum class ReplyCheck { kOk, kBadSignature, kStaleNonce };

// Signature first: a reply whose signature cannot be tied to vk_scm says
// nothing trustworthy about its nonce.
inline ReplyCheck check_state_reply(const VerifyKey& vk, const ScmReply& r,
                                    const Nonce& expected) {
  if (!verify_tagged(vk, r.sig, DomainTag::kScmState,
                     scm_state_payload(r.id, r.curstate, r.nonce_echo))) {
    return ReplyCheck::kBadSignature;
  }
  if (!(r.nonce_echo == expected)) return ReplyCheck::kStaleNonce;
  return ReplyCheck::kOk;
}

inline ReplyCheck check_ack_reply(const VerifyKey& vk, const ScmReply& r,
                                  const Nonce& expected) {
  if (!verify_tagged(vk, r.sig, DomainTag::kScmAck, scm_ack_payload(r.msg, r.nonce_echo))) {
    return ReplyCheck::kBadSignature;
  }
  if (!(r.nonce_echo == expected)) return ReplyCheck::kStaleNonce;
  return ReplyCheck::kOk;
}

// The register contract as seen by callers; implemented by the single node,
// the replicated cluster, and the wire-protocol clients.
class ScmHandle {
 public:
  virtual ~ScmHandle() = default;
  virtual ScmReply init_state(const Nonce& nonce, const Bytes& newstate) = 0;
  virtual ScmReply get_state(const Nonce& nonce) = 0;
  virtual ScmReply update_state(const Nonce& nonce, uint64_t id, const Bytes& newstate) = 0;
  virtual VerifyKey verify_key() const = 0;
};

namespace detail {

// Register state shared by the single node and each cluster replica.
struct ScmCore {
  bool initialized = false;
  bool init_latch = false;  // one-shot: re-init requires a new deployment
  uint64_t id = 0;
  Bytes curstate;
};

}  // namespace detail

// A single SCM node; all three operations execute atomically behind one lock.
class SingleNodeScm : public ScmHandle {
 public:
  explicit SingleNodeScm(ScmKeys keys) : keys_(std::move(keys)) {}

  void set_trace(EventTrace* trace) { trace_ = trace; }

  ScmReply init_state(const Nonce& nonce, const Bytes& newstate) override {
    std::lock_guard lock(mu_);
    if (core_.init_latch) throw AlreadyInitializedError();
    core_.init_latch = true;
    core_.initialized = true;
    core_.id = 0;
    core_.curstate = newstate;
    if (trace_) trace_->append({.kind = Event::Kind::kScmInit, .id = 0});
    return make_state_reply(nonce);
  }

  ScmReply get_state(const Nonce& nonce) override {
    std::lock_guard lock(mu_);
    if (!core_.initialized) throw NotInitializedError();
    if (trace_) trace_->append({.kind = Event::Kind::kScmGet, .id = core_.id});
    return make_state_reply(nonce);
  }

  ScmReply update_state(const Nonce& nonce, uint64_t id, const Bytes& newstate) override {
    std::lock_guard lock(mu_);
    if (!core_.initialized) throw NotInitializedError();
    uint8_t msg = kScmErrorMsg;
    if (id == core_.id + 1) {
      core_.id = id;
      core_.curstate = newstate;
      msg = kScmAckMsg;
    }
    if (trace_) {
      trace_->append({.kind = Event::Kind::kScmUpdate, .id = id, .ack = msg == kScmAckMsg});
    }
    ScmReply r;
    r.state_reply = false;
    r.msg = msg;
    r.nonce_echo = nonce;
    r.sig = sign_tagged(keys_.sk, DomainTag::kScmAck, scm_ack_payload(msg, nonce));
    return r;
  }

  VerifyKey verify_key() const override { return keys_.vk; }

  const SigningKey& signing_key() const { return keys_.sk; }
  uint64_t current_id() const {
    std::lock_guard lock(mu_);
    return core_.id;
  }

  Bytes encode_snapshot() const {
    std::lock_guard lock(mu_);
    Writer w;
    w.bytes(Bytes(keys_.sk.bytes.begin(), keys_.sk.bytes.end()));
    w.bytes(Bytes(keys_.vk.bytes.begin(), keys_.vk.bytes.end()));
    w.u8(core_.initialized ? 1 : 0);
    w.u8(core_.init_latch ? 1 : 0);
    w.u64(core_.id);
    w.bytes(core_.curstate);
    return w.take();
  }

  static std::unique_ptr<SingleNodeScm> decode_snapshot(const Bytes& in) {
    Reader r(in);
    ScmKeys keys;
    Bytes sk = r.bytes();
    Bytes vk = r.bytes();
    if (sk.size() != keys.sk.bytes.size() || vk.size() != keys.vk.bytes.size()) {
      throw CodecError("bad SCM key sizes");
    }
    std::copy(sk.begin(), sk.end(), keys.sk.bytes.begin());
    std::copy(vk.begin(), vk.end(), keys.vk.bytes.begin());
    auto node = std::make_unique<SingleNodeScm>(keys);
    node->core_.initialized = r.u8() != 0;
    node->core_.init_latch = r.u8() != 0;
    node->core_.id = r.u64();
    node->core_.curstate = r.bytes();
    r.expect_done();
    return node;
  }

 private:
  ScmReply make_state_reply(const Nonce& nonce) const {
    ScmReply r;
    r.state_reply = true;
    r.id = core_.id;
    r.curstate = core_.curstate;
    r.nonce_echo = nonce;
    r.sig = sign_tagged(keys_.sk, DomainTag::kScmState,
                        scm_state_payload(r.id, r.curstate, nonce));
    return r;
  }

  ScmKeys keys_;
  mutable std::mutex mu_;
  detail::ScmCore core_;
  EventTrace* trace_ = nullptr;
};

// ---------------------------------------------------------------------------
// Replicated SCM: N crash-prone replicas under a consistent-broadcast
// coordinator. An operation takes effect iff a majority of replicas
// acknowledge it; the cluster then exposes the exact single-node contract.

class ScmReplica {
 public:
  explicit ScmReplica(uint64_t index) : index_(index) {
    auto [sk, vk] = generate_signing_keypair();
    echo_sk_ = sk;
    echo_vk_ = vk;
  }

  struct Echo {
    uint64_t node = 0;
    bool accepted = false;
    uint64_t id = 0;
    Signature sig{};
  };

  bool reachable() const { return !crashed_; }
  void crash() { crashed_ = true; }
  void restart() { crashed_ = false; }

  uint64_t index() const { return index_; }
  const VerifyKey& echo_key() const { return echo_vk_; }
  uint64_t id() const { return core_.id; }
  const Bytes& curstate() const { return core_.curstate; }
  bool initialized() const { return core_.initialized; }
  bool latched() const { return core_.init_latch; }

  void accept_init(const Bytes& newstate) {
    core_.init_latch = true;
    core_.initialized = true;
    core_.id = 0;
    core_.curstate = newstate;
  }

  // First phase of the broadcast: a signed vote, no mutation. The
  // coordinator applies on the accepters only once a majority echoed yes, so
  // a rejected update never becomes visible anywhere.
  Echo vote(uint64_t id, const Bytes& newstate) const {
    Echo e;
    e.node = index_;
    e.id = id;
    e.accepted = core_.initialized && id == core_.id + 1;
    e.sig = sign_tagged(echo_sk_, DomainTag::kScmEcho, echo_payload(e, newstate));
    return e;
  }

  void apply(uint64_t id, const Bytes& newstate) {
    core_.id = id;
    core_.curstate = newstate;
  }

  // Adopted during recovery; never moves the id backwards.
  void adopt(uint64_t id, Bytes curstate) {
    if (!core_.initialized || id >= core_.id) {
      core_.initialized = true;
      core_.init_latch = true;
      core_.id = id;
      core_.curstate = std::move(curstate);
    }
  }

  static Bytes echo_payload(const Echo& e, const Bytes& newstate) {
    Writer w;
    w.u64(e.node);
    w.u8(e.accepted ? 1 : 0);
    w.u64(e.id);
    w.bytes(digest_bytes(sha256(newstate)));
    return w.take();
  }

  Bytes encode_snapshot() const {
    Writer w;
    w.u64(index_);
    w.bytes(Bytes(echo_sk_.bytes.begin(), echo_sk_.bytes.end()));
    w.bytes(Bytes(echo_vk_.bytes.begin(), echo_vk_.bytes.end()));
    w.u8(core_.initialized ? 1 : 0);
    w.u8(core_.init_latch ? 1 : 0);
    w.u64(core_.id);
    w.bytes(core_.curstate);
    return w.take();
  }

  static ScmReplica decode_snapshot(Reader& r) {
    uint64_t index = r.u64();
    ScmReplica rep(index);
    Bytes sk = r.bytes();
    Bytes vk = r.bytes();
    if (sk.size() != rep.echo_sk_.bytes.size() || vk.size() != rep.echo_vk_.bytes.size()) {
      throw CodecError("bad replica key sizes");
    }
    std::copy(sk.begin(), sk.end(), rep.echo_sk_.bytes.begin());
    std::copy(vk.begin(), vk.end(), rep.echo_vk_.bytes.begin());
    rep.core_.initialized = r.u8() != 0;
    rep.core_.init_latch = r.u8() != 0;
    rep.core_.id = r.u64();
    rep.core_.curstate = r.bytes();
    return rep;
  }

 private:
  uint64_t index_;
  SigningKey echo_sk_;
  VerifyKey echo_vk_;
  detail::ScmCore core_;
  bool crashed_ = false;
};

class ScmCluster : public ScmHandle {
 public:
  explicit ScmCluster(size_t nodes, ScmKeys keys = ScmKeys::generate())
      : keys_(std::move(keys)) {
    for (size_t i = 0; i < nodes; ++i) replicas_.emplace_back(i);
  }

  void set_trace(EventTrace* trace) { trace_ = trace; }

  size_t size() const { return replicas_.size(); }
  size_t quorum() const { return replicas_.size() / 2 + 1; }

  void crash_node(size_t i) {
    std::lock_guard lock(mu_);
    replicas_.at(i).crash();
  }

  void restart_node(size_t i) {
    std::lock_guard lock(mu_);
    replicas_.at(i).restart();
  }

  const ScmReplica& node(size_t i) const { return replicas_.at(i); }

  // Brings a restarted replica to the maximum id held by any member of a
  // reachable majority. Idempotent.
  void recover_node(size_t i) {
    std::lock_guard lock(mu_);
    ScmReplica& target = replicas_.at(i);
    if (!target.reachable()) throw NoQuorumError();
    size_t reachable = 0;
    const ScmReplica* best = nullptr;
    for (const ScmReplica& rep : replicas_) {
      if (!rep.reachable()) continue;
      ++reachable;
      if (rep.initialized() && (!best || rep.id() > best->id())) best = &rep;
    }
    if (reachable < quorum()) throw NoQuorumError();
    if (best && best->id() >= target.id()) target.adopt(best->id(), best->curstate());
  }

  ScmReply init_state(const Nonce& nonce, const Bytes& newstate) override {
    std::lock_guard lock(mu_);
    for (const ScmReplica& rep : replicas_) {
      if (rep.reachable() && rep.latched()) throw AlreadyInitializedError();
    }
    require_quorum();
    for (ScmReplica& rep : replicas_) {
      if (rep.reachable()) rep.accept_init(newstate);
    }
    if (trace_) trace_->append({.kind = Event::Kind::kScmInit, .id = 0});
    return make_state_reply(nonce, 0, newstate);
  }

  ScmReply get_state(const Nonce& nonce) override {
    std::lock_guard lock(mu_);
    require_quorum();
    const ScmReplica* best = nullptr;
    for (const ScmReplica& rep : replicas_) {
      if (!rep.reachable() || !rep.initialized()) continue;
      if (!best || rep.id() > best->id()) best = &rep;
    }
    if (!best) throw NotInitializedError();
    if (trace_) trace_->append({.kind = Event::Kind::kScmGet, .id = best->id()});
    return make_state_reply(nonce, best->id(), best->curstate());
  }

  ScmReply update_state(const Nonce& nonce, uint64_t id, const Bytes& newstate) override {
    std::lock_guard lock(mu_);
    require_quorum();
    bool any_initialized = false;
    for (const ScmReplica& rep : replicas_) {
      if (rep.reachable() && rep.initialized()) any_initialized = true;
    }
    if (!any_initialized) throw NotInitializedError();
    // Consistent broadcast: every reachable replica votes by signed echo;
    // the coordinator commits on the accepters iff a majority said yes.
    size_t acks = 0;
    std::vector<ScmReplica*> accepters;
    for (ScmReplica& rep : replicas_) {
      if (!rep.reachable()) continue;
      ScmReplica::Echo e = rep.vote(id, newstate);
      if (!verify_tagged(rep.echo_key(), e.sig, DomainTag::kScmEcho,
                         ScmReplica::echo_payload(e, newstate))) {
        continue;
      }
      if (e.accepted) {
        ++acks;
        accepters.push_back(&rep);
      }
    }
    uint8_t msg = kScmErrorMsg;
    if (acks >= quorum()) {
      for (ScmReplica* rep : accepters) rep->apply(id, newstate);
      msg = kScmAckMsg;
    }
    if (trace_) {
      trace_->append({.kind = Event::Kind::kScmUpdate, .id = id, .ack = msg == kScmAckMsg});
    }
    ScmReply r;
    r.state_reply = false;
    r.msg = msg;
    r.nonce_echo = nonce;
    r.sig = sign_tagged(keys_.sk, DomainTag::kScmAck, scm_ack_payload(msg, nonce));
    return r;
  }

  VerifyKey verify_key() const override { return keys_.vk; }

  Bytes encode_snapshot() const {
    std::lock_guard lock(mu_);
    Writer w;
    w.bytes(Bytes(keys_.sk.bytes.begin(), keys_.sk.bytes.end()));
    w.bytes(Bytes(keys_.vk.bytes.begin(), keys_.vk.bytes.end()));
    w.u64(replicas_.size());
    for (const ScmReplica& rep : replicas_) w.bytes(rep.encode_snapshot());
    return w.take();
  }

  static std::unique_ptr<ScmCluster> decode_snapshot(const Bytes& in) {
    Reader r(in);
    ScmKeys keys;
    Bytes sk = r.bytes();
    Bytes vk = r.bytes();
    if (sk.size() != keys.sk.bytes.size() || vk.size() != keys.vk.bytes.size()) {
      throw CodecError("bad SCM key sizes");
    }
    std::copy(sk.begin(), sk.end(), keys.sk.bytes.begin());
    std::copy(vk.begin(), vk.end(), keys.vk.bytes.begin());
    size_t n = r.u64();
    auto cluster = std::make_unique<ScmCluster>(0, keys);
    for (size_t i = 0; i < n; ++i) {
      Bytes rep = r.bytes();
      Reader rr(rep);
      cluster->replicas_.push_back(ScmReplica::decode_snapshot(rr));
      rr.expect_done();
    }
    r.expect_done();
    return cluster;
  }

 private:
  void require_quorum() const {
    size_t reachable = 0;
    for (const ScmReplica& rep : replicas_) {
      if (rep.reachable()) ++reachable;
    }
    if (reachable < quorum()) throw NoQuorumError();
  }

  ScmReply make_state_reply(const Nonce& nonce, uint64_t id, const Bytes& curstate) const {
    ScmReply r;
    r.state_reply = true;
    r.id = id;
    r.curstate = curstate;
    r.nonce_echo = nonce;
    r.sig = sign_tagged(keys_.sk, DomainTag::kScmState, scm_state_payload(id, curstate, nonce));
    return r;
  }

  ScmKeys keys_;
  mutable std::mutex mu_;
  std::vector<ScmReplica> replicas_;
  EventTrace* trace_ = nullptr;
};

}  // namespace elephantdp
