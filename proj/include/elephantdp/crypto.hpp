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

#include <sodium.h>

#include <array>
#include <cstring>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>

#include "elephantdp/bytes.hpp"
#include "elephantdp/codec.hpp"

namespace elephantdp {

// Thin wrappers over libsodium. The protocol fixes sizes and contracts only:
// any AEAD at the 128-bit level, any 256-bit collision-resistant hash and any
// standard signature scheme would do; here XChaCha20-Poly1305, SHA-256 and
// Ed25519.

inline void crypto_init() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialization failed");
}

namespace detail {

// Seeded replacement for the process randomness source. Simulations are
// replayable byte-for-byte only if key generation, AEAD nonces and freshness
// nonces come from the run's seed as well.
struct SeededRandom {
  std::mutex mu;
  std::mt19937_64 engine{0xe1e90517ull};

  static SeededRandom& instance() {
    static SeededRandom s;
    return s;
  }

  void fill(void* buf, size_t size) {
    std::lock_guard lock(mu);
    auto* p = static_cast<unsigned char*>(buf);
    for (size_t i = 0; i < size; ++i) p[i] = static_cast<unsigned char>(engine());
  }
};

inline const char* seeded_name() { return "seeded"; }
inline void seeded_buf(void* const buf, const size_t size) {
  SeededRandom::instance().fill(buf, size);
}
inline uint32_t seeded_random() {
  uint32_t v = 0;
  seeded_buf(&v, sizeof(v));
  return v;
}
inline void seeded_stir() {}
inline int seeded_close() { return 0; }

}  // namespace detail

// Replaces the OS randomness behind libsodium with a stream derived from
// `seed`; every subsequent key, nonce and ciphertext in the process is a
// deterministic function of it. Call at the top of a simulated run.
inline void seed_process_randomness(uint64_t seed) {
  static randombytes_implementation impl = {
      detail::seeded_name, detail::seeded_random, detail::seeded_stir,
      nullptr,             detail::seeded_buf,    detail::seeded_close,
  };
  static const int installed = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
    return randombytes_set_implementation(&impl);
  }();
  (void)installed;
  std::lock_guard lock(detail::SeededRandom::instance().mu);
  detail::SeededRandom::instance().engine.seed(seed);
}

inline Bytes random_bytes(size_t n) {
  crypto_init();
  Bytes out(n);
  if (n > 0) randombytes_buf(out.data(), n);
  return out;
}

// ---------------------------------------------------------------------------
// Authenticated encryption

struct AeadKey {
  std::array<uint8_t, crypto_aead_xchacha20poly1305_ietf_KEYBYTES> bytes{};

  static AeadKey generate() {
    crypto_init();
    AeadKey k;
    crypto_aead_xchacha20poly1305_ietf_keygen(k.bytes.data());
    return k;
  }

  bool operator==(const AeadKey&) const = default;
};

// Ciphertext layout: fresh random nonce || AEAD ciphertext+tag. Repeated
// encryptions of equal plaintexts differ because the nonce is random.
inline Bytes aead_encrypt(const AeadKey& key, const Bytes& plaintext) {
  crypto_init();
  constexpr size_t kNonce = crypto_aead_xchacha20poly1305_ietf_NPUBBYTES;
  Bytes out(kNonce + plaintext.size() + crypto_aead_xchacha20poly1305_ietf_ABYTES);
  randombytes_buf(out.data(), kNonce);
  unsigned long long clen = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(
      out.data() + kNonce, &clen, plaintext.data(), plaintext.size(), nullptr, 0,
      nullptr, out.data(), key.bytes.data());
  out.resize(kNonce + clen);
  return out;
}

// Returns nullopt when authentication fails (any single-bit modification).
inline std::optional<Bytes> aead_decrypt(const AeadKey& key, const Bytes& ciphertext) {
  crypto_init();
  constexpr size_t kNonce = crypto_aead_xchacha20poly1305_ietf_NPUBBYTES;
  if (ciphertext.size() < kNonce + crypto_aead_xchacha20poly1305_ietf_ABYTES) {
    return std::nullopt;
  }
  Bytes out(ciphertext.size() - kNonce - crypto_aead_xchacha20poly1305_ietf_ABYTES);
  unsigned long long mlen = 0;
  int rc = crypto_aead_xchacha20poly1305_ietf_decrypt(
      out.empty() ? nullptr : out.data(), &mlen, nullptr, ciphertext.data() + kNonce,
      ciphertext.size() - kNonce, nullptr, 0, ciphertext.data(), key.bytes.data());
  if (rc != 0) return std::nullopt;
  out.resize(mlen);
  return out;
}

// ---------------------------------------------------------------------------
// Signatures

using Signature = std::array<uint8_t, crypto_sign_BYTES>;

struct VerifyKey {
  std::array<uint8_t, crypto_sign_PUBLICKEYBYTES> bytes{};
  bool operator==(const VerifyKey&) const = default;
};

struct SigningKey {
  std::array<uint8_t, crypto_sign_SECRETKEYBYTES> bytes{};
  bool operator==(const SigningKey&) const = default;
};

inline std::pair<SigningKey, VerifyKey> generate_signing_keypair() {
  crypto_init();
  SigningKey sk;
  VerifyKey vk;
  crypto_sign_keypair(vk.bytes.data(), sk.bytes.data());
  return {sk, vk};
}

// Every signed payload is prefixed with its domain-separation tag, so a
// signature over one message family never verifies as another.
inline Signature sign_tagged(const SigningKey& sk, DomainTag tag, const Bytes& payload) {
  crypto_init();
  Bytes msg;
  msg.reserve(payload.size() + 1);
  msg.push_back(static_cast<uint8_t>(tag));
  msg.insert(msg.end(), payload.begin(), payload.end());
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), sk.bytes.data());
  return sig;
}

inline bool verify_tagged(const VerifyKey& vk, const Signature& sig, DomainTag tag,
                          const Bytes& payload) {
  crypto_init();
  Bytes msg;
  msg.reserve(payload.size() + 1);
  msg.push_back(static_cast<uint8_t>(tag));
  msg.insert(msg.end(), payload.begin(), payload.end());
  return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), vk.bytes.data()) == 0;
}

// ---------------------------------------------------------------------------
// Hashing

using Digest = std::array<uint8_t, crypto_hash_sha256_BYTES>;

inline Digest sha256(const Bytes& payload) {
  crypto_init();
  Digest d{};
  crypto_hash_sha256(d.data(), payload.data(), payload.size());
  return d;
}

inline Bytes digest_bytes(const Digest& d) { return Bytes(d.begin(), d.end()); }

// ---------------------------------------------------------------------------
// Nonces

// 16-byte uniformly random freshness token, freshly generated per SCM request.
struct Nonce {
  std::array<uint8_t, 16> value{};

  static Nonce generate() {
    crypto_init();
    Nonce n;
    randombytes_buf(n.value.data(), n.value.size());
    return n;
  }

  bool operator==(const Nonce&) const = default;
};

// ---------------------------------------------------------------------------
// Key material handed to a TEE

struct KeyBundle {
  AeadKey data_key;          // k_D, encrypts the dataset
  AeadKey state_key;         // k_s, encrypts the protocol state
  SigningKey state_sign_key; // sk_s
  VerifyKey state_verify_key;  // vk_s
  VerifyKey scm_verify_key;    // vk_scm

  Bytes encode() const {
    Writer w;
    w.bytes(Bytes(data_key.bytes.begin(), data_key.bytes.end()));
    w.bytes(Bytes(state_key.bytes.begin(), state_key.bytes.end()));
    w.bytes(Bytes(state_sign_key.bytes.begin(), state_sign_key.bytes.end()));
    w.bytes(Bytes(state_verify_key.bytes.begin(), state_verify_key.bytes.end()));
    w.bytes(Bytes(scm_verify_key.bytes.begin(), scm_verify_key.bytes.end()));
    return w.take();
  }

  static KeyBundle decode(const Bytes& in) {
    Reader r(in);
    KeyBundle b;
    auto fill = [&](auto& arr) {
      Bytes v = r.bytes();
      if (v.size() != arr.size()) throw CodecError("key size mismatch");
      std::memcpy(arr.data(), v.data(), v.size());
    };
    fill(b.data_key.bytes);
    fill(b.state_key.bytes);
    fill(b.state_sign_key.bytes);
    fill(b.state_verify_key.bytes);
    fill(b.scm_verify_key.bytes);
    r.expect_done();
    return b;
  }

  bool operator==(const KeyBundle&) const = default;
};

}  // namespace elephantdp
