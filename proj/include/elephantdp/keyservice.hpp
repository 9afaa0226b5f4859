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

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "elephantdp/bytes.hpp"
#include "elephantdp/codec.hpp"
#include "elephantdp/crypto.hpp"

namespace elephantdp {

struct AttestationError : std::runtime_error {
  AttestationError() : std::runtime_error("attestation measurement mismatch") {}
};

// Key provisioning keyed on code measurement; stands in for remote
// attestation plus a key vault. Only a TEE whose measurement equals the one
// the owner registered receives the bundle.
class KeyService {
 public:
  KeyService() = default;

  void register_keys(const Bytes& measurement, const KeyBundle& bundle) {
    std::lock_guard lock(mu_);
    bundles_[measurement] = bundle;
  }

  KeyBundle get_keys(const Bytes& measurement) const {
    std::lock_guard lock(mu_);
    auto it = bundles_.find(measurement);
    if (it == bundles_.end()) throw AttestationError();
    return it->second;
  }

  Bytes encode() const {
    std::lock_guard lock(mu_);
    Writer w;
    w.u64(bundles_.size());
    for (const auto& [m, b] : bundles_) {
      w.bytes(m);
      w.bytes(b.encode());
    }
    return w.take();
  }

  static KeyService decode(const Bytes& in) {
    Reader r(in);
    std::map<Bytes, KeyBundle> bundles;
    size_t n = r.u64();
    for (size_t i = 0; i < n; ++i) {
      Bytes m = r.bytes();
      bundles[m] = KeyBundle::decode(r.bytes());
    }
    r.expect_done();
    return KeyService(std::move(bundles));
  }

  static std::unique_ptr<KeyService> decode_ptr(const Bytes& in) {
    auto svc = std::make_unique<KeyService>();
    KeyService parsed = decode(in);
    svc->bundles_ = std::move(parsed.bundles_);
    return svc;
  }

 private:
  explicit KeyService(std::map<Bytes, KeyBundle> bundles) : bundles_(std::move(bundles)) {}

  mutable std::mutex mu_;
  std::map<Bytes, KeyBundle> bundles_;
};

}  // namespace elephantdp
