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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "elephantdp/bytes.hpp"

namespace elephantdp {

// What a read of a tag returns. The adversary owns this dial: it can serve
// the latest value, any historical version, a corrupted value, or nothing.
// Policies affect reads only; the append-only history is never rewritten.
struct ServePolicy {
  enum class Kind { kLatest, kVersion, kCorrupt, kAbsent };

  Kind kind = Kind::kLatest;
  size_t version = 0;
  std::function<void(Bytes&)> mutate;  // kCorrupt

  static ServePolicy latest() { return {}; }
  static ServePolicy at_version(size_t v) { return {Kind::kVersion, v, nullptr}; }
  static ServePolicy corrupt(std::function<void(Bytes&)> fn) {
    return {Kind::kCorrupt, 0, std::move(fn)};
  }
  static ServePolicy absent() { return {Kind::kAbsent, 0, nullptr}; }
};

// Server-side persistent storage: ST.Store(tag, object) / ST.Load(tag).
class Store {
 public:
  virtual ~Store() = default;
  virtual void store(const std::string& tag, const Bytes& object) = 0;
  virtual std::optional<Bytes> load(const std::string& tag) const = 0;
  virtual void set_policy(const std::string& tag, ServePolicy policy) = 0;
  virtual size_t history_size(const std::string& tag) const = 0;
  virtual std::optional<Bytes> version(const std::string& tag, size_t index) const = 0;
};

// In-memory store keeping the full version history per tag.
class VersionedStore : public Store {
 public:
  void store(const std::string& tag, const Bytes& object) override {
    std::lock_guard lock(mu_);
    history_[tag].push_back(object);
  }

  std::optional<Bytes> load(const std::string& tag) const override {
    std::lock_guard lock(mu_);
    auto hist = history_.find(tag);
    const std::vector<Bytes>* versions = hist == history_.end() ? nullptr : &hist->second;
    ServePolicy policy;
    if (auto it = policy_.find(tag); it != policy_.end()) policy = it->second;
    switch (policy.kind) {
      case ServePolicy::Kind::kAbsent:
        return std::nullopt;
      case ServePolicy::Kind::kLatest:
        if (!versions || versions->empty()) return std::nullopt;
        return versions->back();
      case ServePolicy::Kind::kVersion:
        if (!versions || policy.version >= versions->size()) return std::nullopt;
        return (*versions)[policy.version];
      case ServePolicy::Kind::kCorrupt: {
        if (!versions || versions->empty()) return std::nullopt;
        Bytes copy = versions->back();
        if (policy.mutate) policy.mutate(copy);
        return copy;
      }
    }
    return std::nullopt;
  }

  void set_policy(const std::string& tag, ServePolicy policy) override {
    std::lock_guard lock(mu_);
    policy_[tag] = std::move(policy);
  }

  size_t history_size(const std::string& tag) const override {
    std::lock_guard lock(mu_);
    auto it = history_.find(tag);
    return it == history_.end() ? 0 : it->second.size();
  }

  std::optional<Bytes> version(const std::string& tag, size_t index) const override {
    std::lock_guard lock(mu_);
    auto it = history_.find(tag);
    if (it == history_.end() || index >= it->second.size()) return std::nullopt;
    return it->second[index];
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<Bytes>> history_;
  std::map<std::string, ServePolicy> policy_;
};

// File-backed variant: one directory per tag, versions as numbered files.
// Serve policies stay in memory; the file history is append-only.
class FileStore : public Store {
 public:
  explicit FileStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
  }

  void store(const std::string& tag, const Bytes& object) override {
    std::lock_guard lock(mu_);
    std::filesystem::path dir = root_ / tag;
    std::filesystem::create_directories(dir);
    size_t next = count_versions(tag);
    std::ofstream out(version_path(tag, next), std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(object.data()),
              static_cast<std::streamsize>(object.size()));
  }

  std::optional<Bytes> load(const std::string& tag) const override {
    std::lock_guard lock(mu_);
    ServePolicy policy;
    if (auto it = policy_.find(tag); it != policy_.end()) policy = it->second;
    size_t n = count_versions(tag);
    switch (policy.kind) {
      case ServePolicy::Kind::kAbsent:
        return std::nullopt;
      case ServePolicy::Kind::kLatest:
        if (n == 0) return std::nullopt;
        return read_version(tag, n - 1);
      case ServePolicy::Kind::kVersion:
        if (policy.version >= n) return std::nullopt;
        return read_version(tag, policy.version);
      case ServePolicy::Kind::kCorrupt: {
        if (n == 0) return std::nullopt;
        auto copy = read_version(tag, n - 1);
        if (copy && policy.mutate) policy.mutate(*copy);
        return copy;
      }
    }
    return std::nullopt;
  }

  void set_policy(const std::string& tag, ServePolicy policy) override {
    std::lock_guard lock(mu_);
    policy_[tag] = std::move(policy);
  }

  size_t history_size(const std::string& tag) const override {
    std::lock_guard lock(mu_);
    return count_versions(tag);
  }

  std::optional<Bytes> version(const std::string& tag, size_t index) const override {
    std::lock_guard lock(mu_);
    if (index >= count_versions(tag)) return std::nullopt;
    return read_version(tag, index);
  }

 private:
  std::filesystem::path version_path(const std::string& tag, size_t index) const {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.bin", index);
    return root_ / tag / name;
  }

  size_t count_versions(const std::string& tag) const {
    size_t n = 0;
    while (std::filesystem::exists(version_path(tag, n))) ++n;
    return n;
  }

  std::optional<Bytes> read_version(const std::string& tag, size_t index) const {
    std::ifstream in(version_path(tag, index), std::ios::binary);
    if (!in) return std::nullopt;
    Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return out;
  }

  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::map<std::string, ServePolicy> policy_;
};

}  // namespace elephantdp
