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

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "elephantdp/bytes.hpp"
#include "elephantdp/codec.hpp"
#include "elephantdp/crypto.hpp"

namespace elephantdp {

// Machine-readable abort causes, one per abort site of the init and
// reply-query procedures.
enum class AbortReason : uint8_t {
  kNone = 0,
  kInvalidScmSignature,   // SCM reply does not verify under vk_scm
  kFreshnessFailure,      // SCM reply verifies but echoes an old nonce
  kInvalidStateSignature, // SCM-held digest not signed by a valid TEE (vk_s)
  kStaleState,            // stored state fails authentication at id and id+1
  kScmUpdateFailed,       // catch-up update at id+1 rejected by the SCM
  kOutOfSync,             // reply-query state update rejected by the SCM
  kBudgetExhausted,       // post-reply shutdown once B reaches 0
  kAttestationFailure,    // key provisioning denied the measurement
  kStorageMissing,        // a required tag was absent from storage
  kDecryptFailure,        // authenticated decryption of state or data failed
  kScmUnavailable,        // no quorum / no reply from the SCM at all
};

inline const char* abort_reason_name(AbortReason r) {
  switch (r) {
    case AbortReason::kNone: return "None";
    case AbortReason::kInvalidScmSignature: return "InvalidScmSignature";
    case AbortReason::kFreshnessFailure: return "FreshnessFailure";
    case AbortReason::kInvalidStateSignature: return "InvalidStateSignature";
    case AbortReason::kStaleState: return "StaleState";
    case AbortReason::kScmUpdateFailed: return "ScmUpdateFailed";
    case AbortReason::kOutOfSync: return "OutOfSync";
    case AbortReason::kBudgetExhausted: return "BudgetExhausted";
    case AbortReason::kAttestationFailure: return "AttestationFailure";
    case AbortReason::kStorageMissing: return "StorageMissing";
    case AbortReason::kDecryptFailure: return "DecryptFailure";
    case AbortReason::kScmUnavailable: return "ScmUnavailable";
  }
  return "?";
}

// Crash granularity of a query round: exactly the effect boundaries the
// recovery analysis distinguishes.
enum class YieldPoint : uint8_t {
  kAfterMechanism = 0,  // answer computed, nothing persisted
  kAfterStore = 1,      // state in storage, SCM not yet updated
  kAfterScmSend = 2,    // SCM applied the update, reply unprocessed
  kAfterScmAck = 3,     // reply verified, answer not yet sent
  kAfterSend = 4,       // answer delivered to the analyst
};

inline constexpr YieldPoint kAllYieldPoints[] = {
    YieldPoint::kAfterMechanism, YieldPoint::kAfterStore, YieldPoint::kAfterScmSend,
    YieldPoint::kAfterScmAck, YieldPoint::kAfterSend};

inline const char* yield_point_name(YieldPoint p) {
  switch (p) {
    case YieldPoint::kAfterMechanism: return "after-mechanism";
    case YieldPoint::kAfterStore: return "after-store";
    case YieldPoint::kAfterScmSend: return "after-scm-send";
    case YieldPoint::kAfterScmAck: return "after-scm-ack";
    case YieldPoint::kAfterSend: return "after-send";
  }
  return "?";
}

struct Event {
  enum class Kind : uint8_t {
    kStorageStore = 1,
    kStorageLoad,
    kScmInit,
    kScmGet,
    kScmUpdate,
    kAnalystSend,
    kEnclaveStart,
    kEnclaveReady,
    kEnclaveAbort,
    kEnclaveCrash,
  };

  Kind kind;
  uint64_t enclave = UINT64_MAX;
  uint64_t id = 0;        // protocol counter the event concerns
  bool ack = false;       // kScmUpdate outcome
  std::string tag;        // storage tag
  Bytes payload;          // kAnalystSend: canonical (id, q, a) tuple
  double budget = 0.0;    // kAnalystSend: defender-side B when sending
  double epsilon = 0.0;   // kAnalystSend: declared query cost
  bool bottom = true;     // kAnalystSend: answer was the bottom symbol
  AbortReason reason = AbortReason::kNone;
  YieldPoint yield = YieldPoint::kAfterMechanism;
  uint64_t scm_id = 0;    // kEnclaveReady: id in the SCM GetState reply
};

// Append-only record of every cross-component effect in a run. Tests replay
// attacks against it; the auditor below checks the protocol-wide properties.
class EventTrace {
 public:
  void append(Event e) {
    std::lock_guard lock(mu_);
    events_.push_back(std::move(e));
  }

  std::vector<Event> snapshot() const {
    std::lock_guard lock(mu_);
    return events_;
  }

  size_t size() const {
    std::lock_guard lock(mu_);
    return events_.size();
  }

  // Canonical digest for whole-trace determinism checks.
  Digest fingerprint() const {
    Writer w;
    for (const Event& e : snapshot()) {
      w.u8(static_cast<uint8_t>(e.kind));
      w.u64(e.enclave);
      w.u64(e.id);
      w.u8(e.ack ? 1 : 0);
      w.str(e.tag);
      w.bytes(e.payload);
      w.f64(e.budget);
      w.f64(e.epsilon);
      w.u8(e.bottom ? 1 : 0);
      w.u8(static_cast<uint8_t>(e.reason));
      w.u8(static_cast<uint8_t>(e.yield));
      w.u64(e.scm_id);
    }
    return sha256(w.view());
  }

 private:
  mutable std::mutex mu_;
  std::vector<Event> events_;
};

struct AuditReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Trace-wide obligations:
//  - emitted ids start at 1 and first occurrences step by exactly 1; every
//    repeat of an id carries byte-identical payload and budget;
//  - for each id: state stored before the SCM ack, ack before the analyst
//    message;
//  - at every Ready the SCM id trails the enclave id by at most 1;
//  - SCM ids seen by GetState never decrease; at most one acked update per id;
//  - the epsilons of distinct non-bottom answered ids sum to at most the
//    owner's total budget.
inline AuditReport audit_trace(const EventTrace& trace, double total_budget) {
  AuditReport report;
  auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

  std::vector<Event> events = trace.snapshot();
  uint64_t max_emitted = 0;
  std::map<uint64_t, const Event*> first_emit;
  std::map<uint64_t, size_t> first_store;   // state stores per id
  std::map<uint64_t, size_t> ack_position;
  std::map<uint64_t, size_t> ack_count;
  uint64_t last_get_id = 0;
  bool got_any = false;

  for (size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    switch (e.kind) {
      case Event::Kind::kStorageStore:
        if (e.tag == "state" && !first_store.count(e.id)) first_store[e.id] = i;
        break;
      case Event::Kind::kScmGet:
        if (got_any && e.id < last_get_id) {
          fail("SCM id observed by GetState decreased: " + std::to_string(last_get_id) +
               " -> " + std::to_string(e.id));
        }
        last_get_id = e.id;
        got_any = true;
        break;
      case Event::Kind::kScmUpdate:
        if (e.ack) {
          ack_count[e.id] += 1;
          if (ack_count[e.id] > 1) {
            fail("more than one acked SCM update for id " + std::to_string(e.id));
          }
          if (!ack_position.count(e.id)) ack_position[e.id] = i;
        }
        break;
      case Event::Kind::kAnalystSend: {
        if (e.id == 0) {
          fail("analyst tuple with id 0");
          break;
        }
        auto seen = first_emit.find(e.id);
        if (seen == first_emit.end()) {
          if (e.id != max_emitted + 1) {
            fail("first emission of id " + std::to_string(e.id) + " after max " +
                 std::to_string(max_emitted));
          }
          max_emitted = std::max(max_emitted, e.id);
          first_emit[e.id] = &e;
          // order of effects for a fresh id
          auto st = first_store.find(e.id);
          auto ack = ack_position.find(e.id);
          if (st == first_store.end()) {
            fail("id " + std::to_string(e.id) + " emitted without a storage write");
          }
          if (ack == ack_position.end()) {
            fail("id " + std::to_string(e.id) + " emitted without an acked SCM update");
          } else if (st != first_store.end() && st->second > ack->second) {
            fail("id " + std::to_string(e.id) + ": SCM ack precedes the storage write");
          }
        } else {
          const Event& first = *seen->second;
          if (first.payload != e.payload) {
            fail("duplicate tuples for id " + std::to_string(e.id) + " are not byte-equal");
          }
          if (first.budget != e.budget) {
            fail("duplicate tuples for id " + std::to_string(e.id) + " disagree on budget");
          }
        }
        break;
      }
      case Event::Kind::kEnclaveReady:
        if (e.id != e.scm_id && e.id != e.scm_id + 1) {
          fail("Ready with enclave id " + std::to_string(e.id) + " but SCM id " +
               std::to_string(e.scm_id));
        }
        break;
      default:
        break;
    }
  }

  for (uint64_t id = 1; id <= max_emitted; ++id) {
    if (!first_emit.count(id)) fail("gap in emitted ids at " + std::to_string(id));
  }

  double spent = 0.0;
  for (auto& [id, ev] : first_emit) {
    if (!ev->bottom) spent += ev->epsilon;
  }
  if (spent > total_budget + 1e-9) {
    fail("epsilon spent " + std::to_string(spent) + " exceeds total budget " +
         std::to_string(total_budget));
  }

  return report;
}

}  // namespace elephantdp
