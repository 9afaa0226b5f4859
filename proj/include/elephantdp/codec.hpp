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

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "elephantdp/bytes.hpp"

namespace elephantdp {

// Canonical byte encoding shared by everything that signs, hashes or ships
// structured values. Field order is fixed per message type, integers are
// 64-bit little-endian, byte strings carry a 32-bit little-endian length
// prefix, doubles are encoded as the little-endian IEEE-754 bit pattern.
// The encoding is injective over the encoded domain so that signing the
// encoding is as good as signing the value.

struct CodecError : std::runtime_error {
  explicit CodecError(const std::string& what) : std::runtime_error(what) {}
};

// One byte of domain separation prefixes every signed payload. A signature
// produced under one tag must never verify under another.
enum class DomainTag : uint8_t {
  kSealedState = 0x01,  // (id, sealed state ciphertext), signed by sk_s
  kStateDigest = 0x02,  // (id, hash of ciphertext), signed by sk_s
  kScmState = 0x03,     // (id, curstate, nonce) state replies, signed by sk_scm
  kScmAck = 0x04,       // (msg, nonce) update replies, signed by sk_scm
  kScmEcho = 0x05,      // replica echo in the consistent-broadcast round
};

class Writer {
 public:
  void u8(uint8_t v) { out_.push_back(v); }

  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }

  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }

  void raw(const uint8_t* data, size_t n) { out_.insert(out_.end(), data, data + n); }

  void raw(const Bytes& b) { raw(b.data(), b.size()); }

  void bytes(const Bytes& b) {
    if (b.size() > 0xffffffffu) throw CodecError("byte string too long");
    uint32_t n = static_cast<uint32_t>(b.size());
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<uint8_t>(n >> (8 * i)));
    raw(b);
  }

  void str(const std::string& s) { bytes(Bytes(s.begin(), s.end())); }

  void tag(DomainTag t) { u8(static_cast<uint8_t>(t)); }

  Bytes take() { return std::move(out_); }
  const Bytes& view() const { return out_; }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(const Bytes& in) : in_(in) {}

  uint8_t u8() {
    need(1);
    return in_[pos_++];
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  Bytes raw(size_t n) {
    need(n);
    Bytes out(in_.begin() + pos_, in_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }

  Bytes bytes() {
    need(4);
    uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n |= static_cast<uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return raw(n);
  }

  std::string str() {
    Bytes b = bytes();
    return std::string(b.begin(), b.end());
  }

  bool done() const { return pos_ == in_.size(); }
  size_t remaining() const { return in_.size() - pos_; }

  // Decoders call this last: trailing garbage would break injectivity.
  void expect_done() const {
    if (!done()) throw CodecError("trailing bytes after message");
  }

 private:
  void need(size_t n) const {
    if (pos_ + n > in_.size()) throw CodecError("truncated message");
  }

  const Bytes& in_;
  size_t pos_ = 0;
};

}  // namespace elephantdp
