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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "elephantdp/analyst.hpp"
#include "elephantdp/dataset.hpp"
#include "elephantdp/keyservice.hpp"
#include "elephantdp/mechanism.hpp"
#include "elephantdp/protocol_state.hpp"
#include "elephantdp/rng.hpp"
#include "elephantdp/scm.hpp"
#include "elephantdp/storage.hpp"
#include "elephantdp/trace.hpp"

namespace elephantdp {

inline constexpr const char* kStateTag = "state";
inline constexpr const char* kDataTag = "data";

// Budget comparisons; epsilon arithmetic stays in clean doubles but a
// tolerance keeps the B == 0 shutdown check robust.
inline constexpr double kBudgetTol = 1e-12;

enum class Phase : uint8_t { kFresh, kReady, kAborted, kCrashed };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kFresh: return "Fresh";
    case Phase::kReady: return "Ready";
    case Phase::kAborted: return "Aborted";
    case Phase::kCrashed: return "Crashed";
  }
  return "?";
}

// How an enclave derives the mechanism's randomness. Each instance gets an
// independent source; the pinned per-id schedule exists so a run and its
// ideal-functionality replay can draw identical noise for the same counter.
struct NoisePolicy {
  enum class Mode { kPerInstance, kPerIdSchedule };

  Mode mode = Mode::kPerInstance;
  uint64_t seed = 0;
  bool zero_noise = false;
  size_t chunk_rows = 0;  // mechanism evaluation chunk size, 0 = whole dataset

  static NoisePolicy per_instance(uint64_t seed) { return {Mode::kPerInstance, seed, false, 0}; }
  static NoisePolicy per_id(uint64_t master_seed) {
    return {Mode::kPerIdSchedule, master_seed, false, 0};
  }
};

struct EnclaveEnv {
  ScmHandle* scm = nullptr;
  Store* storage = nullptr;
  KeyService* keys = nullptr;
  AnalystSink* analyst = nullptr;
  EventTrace* trace = nullptr;  // optional
};

// ---------------------------------------------------------------------------
// Dataset at rest: an encrypted manifest naming the chunk count under 'data',
// one encrypted chunk per 'data.<i>' tag, each chunk binding its own index.

inline void store_encrypted_dataset(Store& storage, const AeadKey& data_key,
                                    const Dataset& dataset, size_t chunk_rows,
                                    EventTrace* trace = nullptr) {
  size_t rows = dataset.row_count();
  if (chunk_rows == 0 || chunk_rows >= rows) chunk_rows = rows == 0 ? 1 : rows;
  size_t chunks = rows == 0 ? 1 : (rows + chunk_rows - 1) / chunk_rows;
  Writer manifest;
  manifest.u64(chunks);
  storage.store(kDataTag, aead_encrypt(data_key, manifest.take()));
  if (trace) trace->append({.kind = Event::Kind::kStorageStore, .tag = kDataTag});
  for (size_t i = 0; i < chunks; ++i) {
    Dataset part = dataset.slice(i * chunk_rows, (i + 1) * chunk_rows);
    Writer w;
    w.u64(i);
    w.bytes(part.encode());
    storage.store(std::string(kDataTag) + "." + std::to_string(i),
                  aead_encrypt(data_key, w.take()));
  }
}

// Returns nullopt when anything is missing or fails authentication.
inline std::optional<Dataset> load_encrypted_dataset(const Store& storage,
                                                     const AeadKey& data_key) {
  auto manifest_ct = storage.load(kDataTag);
  if (!manifest_ct) return std::nullopt;
  auto manifest = aead_decrypt(data_key, *manifest_ct);
  if (!manifest) return std::nullopt;
  size_t chunks = 0;
  try {
    Reader r(*manifest);
    chunks = r.u64();
    r.expect_done();
  } catch (const CodecError&) {
    return std::nullopt;
  }
  std::optional<Dataset> combined;
  for (size_t i = 0; i < chunks; ++i) {
    auto ct = storage.load(std::string(kDataTag) + "." + std::to_string(i));
    if (!ct) return std::nullopt;
    auto pt = aead_decrypt(data_key, *ct);
    if (!pt) return std::nullopt;
    try {
      Reader r(*pt);
      if (r.u64() != i) return std::nullopt;  // chunk served under the wrong index
      Dataset part = Dataset::decode(r.bytes());
      r.expect_done();
      if (!combined) {
        combined = std::move(part);
      } else {
        std::vector<std::pair<std::string, std::vector<double>>> cols;
        for (const std::string& name : combined->column_names()) {
          std::vector<double> merged = combined->column(name);
          const std::vector<double>& extra = part.column(name);
          merged.insert(merged.end(), extra.begin(), extra.end());
          cols.emplace_back(name, std::move(merged));
        }
        combined = Dataset::from_columns(std::move(cols), combined->bounds());
      }
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return combined;
}

// ---------------------------------------------------------------------------
// System setup, run by the data owner against a fresh SCM.

struct SetupError : std::runtime_error {
  explicit SetupError(const std::string& what) : std::runtime_error(what) {}
};

struct SetupOptions {
  Bytes measurement = bytes_of("dp-query-enclave-v1");
  size_t data_chunk_rows = 0;
};

// Generates the key material, seals the initial state bot||bot||B under
// id 0, initializes the SCM with the signed digest (verifying the signed
// reply against vk_scm and the fresh nonce), uploads the encrypted dataset
// and state, and registers the bundle with the provisioning service.
inline KeyBundle setup_deployment(const Dataset& dataset, double total_budget, ScmHandle& scm,
                                  Store& storage, KeyService& keyservice,
                                  EventTrace* trace = nullptr, const SetupOptions& opt = {}) {
  if (!(total_budget > 0.0)) throw SetupError("total budget must be positive");
  KeyBundle bundle;
  bundle.data_key = AeadKey::generate();
  bundle.state_key = AeadKey::generate();
  auto [sk_s, vk_s] = generate_signing_keypair();
  bundle.state_sign_key = sk_s;
  bundle.state_verify_key = vk_s;
  bundle.scm_verify_key = scm.verify_key();

  ProtocolState s0;
  s0.budget = total_budget;
  s0.id = 0;
  SealedState sealed = seal_state(bundle.state_key, bundle.state_sign_key, 0, s0);
  StateDigest digest = make_state_digest(bundle.state_sign_key, 0, sealed.ciphertext);
  Bytes curstate = encode_curstate(digest);

  Nonce nonce = Nonce::generate();
  ScmReply reply;
  try {
    reply = scm.init_state(nonce, curstate);
  } catch (const AlreadyInitializedError&) {
    throw SetupError("state initialization at SCM failed: already initialized");
  } catch (const NoQuorumError&) {
    throw SetupError("state initialization at SCM failed: no quorum");
  }
  if (check_state_reply(bundle.scm_verify_key, reply, nonce) != ReplyCheck::kOk ||
      reply.id != 0 || reply.curstate != curstate) {
    throw SetupError("state initialization at SCM failed");
  }

  storage.store(kStateTag, encode_state_record(sealed));
  if (trace) trace->append({.kind = Event::Kind::kStorageStore, .id = 0, .tag = kStateTag});
  store_encrypted_dataset(storage, bundle.data_key, dataset, opt.data_chunk_rows, trace);

  keyservice.register_keys(opt.measurement, bundle);
  return bundle;
}

// ---------------------------------------------------------------------------
// The enclave proper.

class QueryRound;

class Enclave {
 public:
  Enclave(EnclaveEnv env, Bytes measurement, NoisePolicy noise, uint64_t instance = 0)
      : env_(env),
        measurement_(std::move(measurement)),
        noise_(noise),
        instance_(instance),
        rng_(noise.seed) {}

  Phase phase() const { return phase_; }
  AbortReason abort_reason() const { return reason_; }
  uint64_t instance() const { return instance_; }
  uint64_t current_id() const { return state_.id; }
  double remaining_budget() const { return state_.budget; }
  const ProtocolState& state() const { return state_; }
  const Dataset& dataset() const { return dataset_; }

  // TEE initialization; runs every (re)start. On success the enclave holds
  // keys, dataset and the freshest state, and has re-sent the recorded
  // answer when one exists.
  Phase init() {
    if (phase_ != Phase::kFresh) return phase_;
    trace({.kind = Event::Kind::kEnclaveStart});

    // Keys via attestation-gated provisioning.
    try {
      keys_ = env_.keys->get_keys(measurement_);
    } catch (const AttestationError&) {
      return abort(AbortReason::kAttestationFailure);
    }

    // Signed, fresh digest from the SCM.
    Nonce nonce = Nonce::generate();
    ScmReply reply;
    try {
      reply = env_.scm->get_state(nonce);
    } catch (const std::exception&) {
      return abort(AbortReason::kScmUnavailable);
    }
    switch (check_state_reply(keys_.scm_verify_key, reply, nonce)) {
      case ReplyCheck::kBadSignature:
        return abort(AbortReason::kInvalidScmSignature);
      case ReplyCheck::kStaleNonce:
        return abort(AbortReason::kFreshnessFailure);
      case ReplyCheck::kOk:
        break;
    }
    uint64_t scm_id = reply.id;
    StateDigest digest;
    try {
      digest = decode_curstate(reply.curstate);
    } catch (const CodecError&) {
      return abort(AbortReason::kInvalidStateSignature);
    }
    if (!verify_tagged(keys_.state_verify_key, digest.sig, DomainTag::kStateDigest,
                       state_digest_payload(scm_id, digest.h))) {
      return abort(AbortReason::kInvalidStateSignature);
    }

    // Latest state from untrusted storage.
    auto record_bytes = env_.storage->load(kStateTag);
    trace({.kind = Event::Kind::kStorageLoad, .tag = kStateTag});
    if (!record_bytes) return abort(AbortReason::kStorageMissing);
    SealedState stored;
    try {
      stored = decode_state_record(*record_bytes);
    } catch (const CodecError&) {
      return abort(AbortReason::kStaleState);
    }

    uint64_t local_id = 0;
    bool in_sync =
        verify_tagged(keys_.state_verify_key, stored.sig, DomainTag::kSealedState,
                      sealed_state_payload(scm_id, stored.ciphertext)) &&
        sha256(stored.ciphertext) == digest.h;
    if (in_sync) {
      local_id = scm_id;
    } else if (verify_tagged(keys_.state_verify_key, stored.sig, DomainTag::kSealedState,
                             sealed_state_payload(scm_id + 1, stored.ciphertext))) {
      // The previous TEE crashed after storing but before the SCM accepted
      // its update; catch the SCM up to id+1.
      StateDigest fresh = make_state_digest(keys_.state_sign_key, scm_id + 1, stored.ciphertext);
      Nonce nonce2 = Nonce::generate();
      ScmReply up;
      try {
        up = env_.scm->update_state(nonce2, scm_id + 1, encode_curstate(fresh));
      } catch (const std::exception&) {
        return abort(AbortReason::kScmUnavailable);
      }
      if (check_ack_reply(keys_.scm_verify_key, up, nonce2) != ReplyCheck::kOk ||
          up.msg != kScmAckMsg) {
        return abort(AbortReason::kScmUpdateFailed);
      }
      local_id = scm_id + 1;
    } else {
      return abort(AbortReason::kStaleState);
    }

    // Decrypt the state; resend the recorded answer if one exists.
    auto plaintext = aead_decrypt(keys_.state_key, stored.ciphertext);
    if (!plaintext) return abort(AbortReason::kDecryptFailure);
    try {
      state_ = decode_state_plaintext(*plaintext);
    } catch (const CodecError&) {
      return abort(AbortReason::kDecryptFailure);
    }
    state_.id = local_id;
    if (state_.id != 0 && state_.q) {
      send_to_analyst(AnalystTuple{state_.id, *state_.q, state_.a});
    }

    // Load and decrypt the dataset.
    auto data = load_encrypted_dataset(*env_.storage, keys_.data_key);
    trace({.kind = Event::Kind::kStorageLoad, .tag = kDataTag});
    if (!data) return abort(AbortReason::kDecryptFailure);
    dataset_ = std::move(*data);

    phase_ = Phase::kReady;
    trace({.kind = Event::Kind::kEnclaveReady, .id = state_.id, .scm_id = scm_id});
    return phase_;
  }

  // One full protocol round; convenience over the stepwise QueryRound.
  Phase reply_query(const Query& q);
  QueryRound begin_query(const Query& q);

  // The adversary kills the process: runtime state is unrecoverable, effects
  // already persisted stay.
  void crash(YieldPoint at = YieldPoint::kAfterMechanism) {
    trace({.kind = Event::Kind::kEnclaveCrash, .id = state_.id, .yield = at});
    phase_ = Phase::kCrashed;
    state_ = ProtocolState{};
    dataset_ = Dataset{};
    keys_ = KeyBundle{};
  }

 private:
  friend class QueryRound;

  Phase abort(AbortReason reason) {
    phase_ = Phase::kAborted;
    reason_ = reason;
    trace({.kind = Event::Kind::kEnclaveAbort, .id = state_.id, .reason = reason});
    return phase_;
  }

  void trace(Event e) {
    if (!env_.trace) return;
    e.enclave = instance_;
    env_.trace->append(std::move(e));
  }

  void send_to_analyst(const AnalystTuple& t) {
    Bytes wire = encode_analyst_tuple(t);
    if (env_.analyst) env_.analyst->deliver(wire);
    trace({.kind = Event::Kind::kAnalystSend,
           .id = t.id,
           .payload = wire,
           .budget = state_.budget,
           .epsilon = t.q.epsilon,
           .bottom = t.a.is_bottom});
  }

  DetRng rng_for_query(uint64_t id) {
    if (noise_.mode == NoisePolicy::Mode::kPerIdSchedule) {
      return DetRng(mix_seed(noise_.seed, id));
    }
    return DetRng(rng_.next_u64());
  }

  EnclaveEnv env_;
  Bytes measurement_;
  NoisePolicy noise_;
  uint64_t instance_;
  DetRng rng_;
  KeyBundle keys_;
  ProtocolState state_;
  Dataset dataset_;
  Phase phase_ = Phase::kFresh;
  AbortReason reason_ = AbortReason::kNone;
};

// A reply-query round broken at the declared yield points so the harness can
// crash the enclave at any effect boundary and interleave racing enclaves
// deterministically.
class QueryRound {
 public:
  QueryRound(Enclave& e, Query q) : e_(&e), q_(std::move(q)) {
    if (e_->phase_ != Phase::kReady) step_ = kDone;
  }

  bool finished() const { return step_ == kDone; }

  // Performs the next segment; returns the yield point just passed, or
  // nullopt when the round is over (sent, aborted, or crashed).
  std::optional<YieldPoint> advance() {
    if (e_->phase_ == Phase::kCrashed || e_->phase_ == Phase::kAborted) step_ = kDone;
    if (step_ == kDone) return std::nullopt;
    switch (step_++) {
      case 0: {  // M(D, q), budget branch, new sealed state
        MechanismResult result;
        try {
          result = run_mechanism(e_->dataset_, q_, rng_,
                                 MechanismOptions{e_->noise_.zero_noise, e_->noise_.chunk_rows});
        } catch (...) {
          step_ = kDone;  // bad query: nothing staged, nothing persisted
          throw;
        }
        auto [answer, eps] = result;
        next_ = e_->state_;
        if (e_->state_.budget - eps >= -kBudgetTol) {
          next_.budget = e_->state_.budget - eps;
        } else {
          answer = Answer::bottom();  // budget stays the same
        }
        next_.q = q_;
        next_.a = answer;
        next_.id = e_->state_.id + 1;
        sealed_ = seal_state(e_->keys_.state_key, e_->keys_.state_sign_key, next_.id, next_);
        digest_ = make_state_digest(e_->keys_.state_sign_key, next_.id, sealed_.ciphertext);
        return YieldPoint::kAfterMechanism;
      }
      case 1: {  // state reaches untrusted storage first
        e_->env_.storage->store(kStateTag, encode_state_record(sealed_));
        e_->trace({.kind = Event::Kind::kStorageStore, .id = next_.id, .tag = kStateTag});
        return YieldPoint::kAfterStore;
      }
      case 2: {  // the SCM processes the update; reply not yet examined
        nonce_ = Nonce::generate();
        try {
          reply_ = e_->env_.scm->update_state(nonce_, next_.id, encode_curstate(digest_));
          have_reply_ = true;
        } catch (const std::exception&) {
          have_reply_ = false;
        }
        return YieldPoint::kAfterScmSend;
      }
      case 3: {  // verify the ack and commit locally
        if (!have_reply_ ||
            check_ack_reply(e_->keys_.scm_verify_key, reply_, nonce_) != ReplyCheck::kOk ||
            reply_.msg != kScmAckMsg) {
          step_ = kDone;
          e_->abort(have_reply_ ? AbortReason::kOutOfSync : AbortReason::kScmUnavailable);
          return std::nullopt;
        }
        e_->state_ = next_;
        return YieldPoint::kAfterScmAck;
      }
      case 4: {  // answer goes to the analyst; shut down once B hits 0
        e_->send_to_analyst(AnalystTuple{next_.id, q_, next_.a});
        step_ = kDone;
        if (e_->state_.budget <= kBudgetTol) {
          e_->abort(AbortReason::kBudgetExhausted);
          return std::nullopt;
        }
        return YieldPoint::kAfterSend;
      }
      default:
        step_ = kDone;
        return std::nullopt;
    }
  }

  void run_to_completion() {
    while (!finished()) {
      if (!advance() && finished()) break;
    }
  }

 private:
  static constexpr int kDone = 5;

  Enclave* e_;
  Query q_;
  DetRng rng_{0};
  int step_ = 0;
  ProtocolState next_;
  SealedState sealed_;
  StateDigest digest_;
  Nonce nonce_;
  ScmReply reply_;
  bool have_reply_ = false;

  friend class Enclave;
};

inline QueryRound Enclave::begin_query(const Query& q) {
  QueryRound round(*this, q);
  round.rng_ = rng_for_query(state_.id + 1);
  return round;
}

inline Phase Enclave::reply_query(const Query& q) {
  QueryRound round = begin_query(q);
  round.run_to_completion();
  return phase_;
}

}  // namespace elephantdp
