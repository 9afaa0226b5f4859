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

#include "elephantdp/codec.hpp"
#include "elephantdp/crypto.hpp"
#include "elephantdp/query.hpp"

namespace elephantdp {

// The tuple s = q || a || B plus the query counter id. The sealed payload is
// q || a || B only; id is bound to the ciphertext through the signatures.
struct ProtocolState {
  std::optional<Query> q;       // last query, absent right after setup
  Answer a = Answer::bottom();  // its answer
  double budget = 0.0;          // remaining budget B
  uint64_t id = 0;              // counter of all state transitions
};

inline Bytes encode_state_plaintext(const ProtocolState& s) {
  Writer w;
  w.u8(s.q.has_value() ? 1 : 0);
  if (s.q) {
    Bytes q = s.q->encode();
    w.bytes(q);
  }
  s.a.encode_to(w);
  w.f64(s.budget);
  return w.take();
}

// Decoded id is left at 0; callers bind the id from the signature context.
inline ProtocolState decode_state_plaintext(const Bytes& in) {
  Reader r(in);
  ProtocolState s;
  if (r.u8() != 0) s.q = Query::decode(r.bytes());
  s.a = Answer::decode_from(r);
  s.budget = r.f64();
  r.expect_done();
  return s;
}

// Encrypted state plus the signature binding it to its counter value.
struct SealedState {
  Bytes ciphertext;  // AE(k_s, q || a || B)
  Signature sig{};   // Sign(sk_s, kSealedState || (id, ciphertext))
};

// Hash of the encrypted state plus the signature binding it to the counter;
// what the SCM holds. Hashing the ciphertext (not the plaintext) keeps the
// digest of a small answer domain undictionariable.
struct StateDigest {
  Digest h{};
  Signature sig{};  // Sign(sk_s, kStateDigest || (id, h))
};

inline Bytes sealed_state_payload(uint64_t id, const Bytes& ciphertext) {
  Writer w;
  w.u64(id);
  w.bytes(ciphertext);
  return w.take();
}

inline Bytes state_digest_payload(uint64_t id, const Digest& h) {
  Writer w;
  w.u64(id);
  w.raw(h.data(), h.size());
  return w.take();
}

inline SealedState seal_state(const AeadKey& state_key, const SigningKey& sk, uint64_t id,
                              const ProtocolState& s) {
  SealedState sealed;
  sealed.ciphertext = aead_encrypt(state_key, encode_state_plaintext(s));
  sealed.sig = sign_tagged(sk, DomainTag::kSealedState,
                           sealed_state_payload(id, sealed.ciphertext));
  return sealed;
}

inline StateDigest make_state_digest(const SigningKey& sk, uint64_t id,
                                     const Bytes& ciphertext) {
  StateDigest d;
  d.h = sha256(ciphertext);
  d.sig = sign_tagged(sk, DomainTag::kStateDigest, state_digest_payload(id, d.h));
  return d;
}

// Storage record under tag 'state': (sigma, sealed state).
inline Bytes encode_state_record(const SealedState& s) {
  Writer w;
  w.bytes(s.ciphertext);
  w.raw(s.sig.data(), s.sig.size());
  return w.take();
}

inline SealedState decode_state_record(const Bytes& in) {
  Reader r(in);
  SealedState s;
  s.ciphertext = r.bytes();
  Bytes sig = r.raw(s.sig.size());
  std::copy(sig.begin(), sig.end(), s.sig.begin());
  r.expect_done();
  return s;
}

// SCM curstate payload: (sigma_h, h).
inline Bytes encode_curstate(const StateDigest& d) {
  Writer w;
  w.raw(d.h.data(), d.h.size());
  w.raw(d.sig.data(), d.sig.size());
  return w.take();
}

inline StateDigest decode_curstate(const Bytes& in) {
  Reader r(in);
  StateDigest d;
  Bytes h = r.raw(d.h.size());
  std::copy(h.begin(), h.end(), d.h.begin());
  Bytes sig = r.raw(d.sig.size());
  std::copy(sig.begin(), sig.end(), d.sig.begin());
  r.expect_done();
  return d;
}

}  // namespace elephantdp
