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

#include <utility>

#include "elephantdp/enclave.hpp"

namespace elephantdp {

// Insecure reference systems. They reuse the mechanism and the analyst
// channel so that any difference in attack outcome is down to how the budget
// is persisted, not to the DP code.

// Budget lives in runtime memory only. A crash forgets everything; a restart
// cannot tell how much budget was already spent and starts from the owner's
// full allocation.
class RuntimeBudgetEnclave {
 public:
  RuntimeBudgetEnclave(Store* storage, AnalystSink* analyst, EventTrace* trace,
                       KeyBundle keys, double total_budget, NoisePolicy noise,
                       uint64_t instance = 0)
      : storage_(storage),
        analyst_(analyst),
        trace_(trace),
        keys_(std::move(keys)),
        total_budget_(total_budget),
        noise_(noise),
        instance_(instance),
        rng_(noise.seed) {}

  Phase phase() const { return phase_; }
  double remaining_budget() const { return budget_; }

  Phase init() {
    if (phase_ != Phase::kFresh) return phase_;
    if (trace_) trace_->append({.kind = Event::Kind::kEnclaveStart, .enclave = instance_});
    auto data = load_encrypted_dataset(*storage_, keys_.data_key);
    if (!data) {
      phase_ = Phase::kAborted;
      return phase_;
    }
    dataset_ = std::move(*data);
    budget_ = total_budget_;  // no record of prior consumption survives
    id_ = 0;
    phase_ = Phase::kReady;
    if (trace_) trace_->append({.kind = Event::Kind::kEnclaveReady, .enclave = instance_});
    return phase_;
  }

  Answer reply_query(const Query& q) {
    DetRng rng(rng_.next_u64());
    auto [answer, eps] =
        run_mechanism(dataset_, q, rng, MechanismOptions{noise_.zero_noise, noise_.chunk_rows});
    if (budget_ - eps >= -kBudgetTol) {
      budget_ -= eps;
    } else {
      answer = Answer::bottom();
    }
    ++id_;
    send(AnalystTuple{id_, q, answer});
    return answer;
  }

  void crash() {
    phase_ = Phase::kCrashed;
    dataset_ = Dataset{};
    budget_ = 0.0;
  }

 private:
  void send(const AnalystTuple& t) {
    Bytes wire = encode_analyst_tuple(t);
    if (analyst_) analyst_->deliver(wire);
    if (trace_) {
      trace_->append({.kind = Event::Kind::kAnalystSend,
                      .enclave = instance_,
                      .id = t.id,
                      .payload = wire,
                      .budget = budget_,
                      .epsilon = t.q.epsilon,
                      .bottom = t.a.is_bottom});
    }
  }

  Store* storage_;
  AnalystSink* analyst_;
  EventTrace* trace_;
  KeyBundle keys_;
  double total_budget_;
  NoisePolicy noise_;
  uint64_t instance_;
  DetRng rng_;
  Dataset dataset_;
  double budget_ = 0.0;
  uint64_t id_ = 0;
  Phase phase_ = Phase::kFresh;
};

// Budget sealed (authenticated encryption + signature) in persistent storage,
// with no freshness anchor. Integrity holds, recency does not: a rolled-back
// state file verifies perfectly and restores spent budget.

inline Bytes encode_sealed_budget_record(uint64_t id, const SealedState& s) {
  Writer w;
  w.u64(id);
  w.bytes(s.ciphertext);
  w.raw(s.sig.data(), s.sig.size());
  return w.take();
}

inline std::pair<uint64_t, SealedState> decode_sealed_budget_record(const Bytes& in) {
  Reader r(in);
  uint64_t id = r.u64();
  SealedState s;
  s.ciphertext = r.bytes();
  Bytes sig = r.raw(s.sig.size());
  std::copy(sig.begin(), sig.end(), s.sig.begin());
  r.expect_done();
  return {id, s};
}

inline KeyBundle setup_sealed_budget_deployment(const Dataset& dataset, double total_budget,
                                                Store& storage, size_t chunk_rows = 0) {
  KeyBundle bundle;
  bundle.data_key = AeadKey::generate();
  bundle.state_key = AeadKey::generate();
  auto [sk, vk] = generate_signing_keypair();
  bundle.state_sign_key = sk;
  bundle.state_verify_key = vk;

  ProtocolState s0;
  s0.budget = total_budget;
  SealedState sealed = seal_state(bundle.state_key, bundle.state_sign_key, 0, s0);
  storage.store(kStateTag, encode_sealed_budget_record(0, sealed));
  store_encrypted_dataset(storage, bundle.data_key, dataset, chunk_rows);
  return bundle;
}

class SealedBudgetEnclave {
 public:
  SealedBudgetEnclave(Store* storage, AnalystSink* analyst, EventTrace* trace, KeyBundle keys,
                      NoisePolicy noise, uint64_t instance = 0)
      : storage_(storage),
        analyst_(analyst),
        trace_(trace),
        keys_(std::move(keys)),
        noise_(noise),
        instance_(instance),
        rng_(noise.seed) {}

  Phase phase() const { return phase_; }
  AbortReason abort_reason() const { return reason_; }
  double remaining_budget() const { return state_.budget; }
  uint64_t current_id() const { return state_.id; }

  Phase init() {
    if (phase_ != Phase::kFresh) return phase_;
    if (trace_) trace_->append({.kind = Event::Kind::kEnclaveStart, .enclave = instance_});
    auto record = storage_->load(kStateTag);
    if (!record) return abort(AbortReason::kStorageMissing);
    uint64_t id = 0;
    SealedState sealed;
    try {
      std::tie(id, sealed) = decode_sealed_budget_record(*record);
    } catch (const CodecError&) {
      return abort(AbortReason::kStaleState);
    }
    // The record's own claimed id is all there is to check against.
    if (!verify_tagged(keys_.state_verify_key, sealed.sig, DomainTag::kSealedState,
                       sealed_state_payload(id, sealed.ciphertext))) {
      return abort(AbortReason::kStaleState);
    }
    auto plaintext = aead_decrypt(keys_.state_key, sealed.ciphertext);
    if (!plaintext) return abort(AbortReason::kDecryptFailure);
    try {
      state_ = decode_state_plaintext(*plaintext);
    } catch (const CodecError&) {
      return abort(AbortReason::kDecryptFailure);
    }
    state_.id = id;
    auto data = load_encrypted_dataset(*storage_, keys_.data_key);
    if (!data) return abort(AbortReason::kDecryptFailure);
    dataset_ = std::move(*data);
    phase_ = Phase::kReady;
    if (trace_) {
      trace_->append({.kind = Event::Kind::kEnclaveReady, .enclave = instance_, .id = state_.id});
    }
    return phase_;
  }

  Answer reply_query(const Query& q) {
    DetRng rng(rng_.next_u64());
    auto [answer, eps] =
        run_mechanism(dataset_, q, rng, MechanismOptions{noise_.zero_noise, noise_.chunk_rows});
    if (state_.budget - eps >= -kBudgetTol) {
      state_.budget -= eps;
    } else {
      answer = Answer::bottom();
    }
    state_.id += 1;
    state_.q = q;
    state_.a = answer;
    SealedState sealed = seal_state(keys_.state_key, keys_.state_sign_key, state_.id, state_);
    storage_->store(kStateTag, encode_sealed_budget_record(state_.id, sealed));
    if (trace_) {
      trace_->append(
          {.kind = Event::Kind::kStorageStore, .enclave = instance_, .id = state_.id, .tag = kStateTag});
    }
    send(AnalystTuple{state_.id, q, answer});
    return answer;
  }

  void crash() {
    phase_ = Phase::kCrashed;
    state_ = ProtocolState{};
    dataset_ = Dataset{};
  }

 private:
  Phase abort(AbortReason reason) {
    phase_ = Phase::kAborted;
    reason_ = reason;
    if (trace_) {
      trace_->append({.kind = Event::Kind::kEnclaveAbort, .enclave = instance_, .reason = reason});
    }
    return phase_;
  }

  void send(const AnalystTuple& t) {
    Bytes wire = encode_analyst_tuple(t);
    if (analyst_) analyst_->deliver(wire);
    if (trace_) {
      trace_->append({.kind = Event::Kind::kAnalystSend,
                      .enclave = instance_,
                      .id = t.id,
                      .payload = wire,
                      .budget = state_.budget,
                      .epsilon = t.q.epsilon,
                      .bottom = t.a.is_bottom});
    }
  }

  Store* storage_;
  AnalystSink* analyst_;
  EventTrace* trace_;
  KeyBundle keys_;
  NoisePolicy noise_;
  uint64_t instance_;
  DetRng rng_;
  ProtocolState state_;
  Dataset dataset_;
  Phase phase_ = Phase::kFresh;
  AbortReason reason_ = AbortReason::kNone;
};

// No TEE, no crypto, no continuity: evaluates the mechanism over the plain
// dataset. The cost baseline for the relative-overhead comparison.
class NaiveDpServer {
 public:
  NaiveDpServer(Dataset dataset, double total_budget, AnalystSink* analyst, NoisePolicy noise)
      : dataset_(std::move(dataset)),
        budget_(total_budget),
        analyst_(analyst),
        noise_(noise),
        rng_(noise.seed) {}

  double remaining_budget() const { return budget_; }

  Answer reply_query(const Query& q) {
    DetRng rng(rng_.next_u64());
    auto [answer, eps] =
        run_mechanism(dataset_, q, rng, MechanismOptions{noise_.zero_noise, noise_.chunk_rows});
    if (budget_ - eps >= -kBudgetTol) {
      budget_ -= eps;
    } else {
      answer = Answer::bottom();
    }
    ++id_;
    if (analyst_) analyst_->deliver(encode_analyst_tuple(AnalystTuple{id_, q, answer}));
    return answer;
  }

 private:
  Dataset dataset_;
  double budget_;
  AnalystSink* analyst_;
  NoisePolicy noise_;
  DetRng rng_;
  uint64_t id_ = 0;
};

}  // namespace elephantdp
