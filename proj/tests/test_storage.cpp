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

#include "doctest.h"

#include <unistd.h>

#include <filesystem>

#include "elephantdp/storage.hpp"

using namespace elephantdp;

namespace {

void exercise_store(Store& s) {
  Bytes v1 = bytes_of("v1");
  Bytes v2 = bytes_of("v2");

  SUBCASE("write then read") {
    s.store("state", v1);
    CHECK(s.load("state") == v1);
  }

  SUBCASE("history is append-only") {
    s.store("state", v1);
    s.store("state", v2);
    CHECK(s.history_size("state") == 2);
    CHECK(s.version("state", 0) == v1);
    CHECK(s.version("state", 1) == v2);
    CHECK(s.load("state") == v2);
  }

  SUBCASE("absent policy models adversarial drop") {
    s.store("state", v1);
    s.set_policy("state", ServePolicy::absent());
    CHECK_FALSE(s.load("state").has_value());
    s.set_policy("state", ServePolicy::latest());
    CHECK(s.load("state") == v1);
  }

  SUBCASE("version policy serves the historical value") {
    s.store("state", v1);
    s.store("state", v2);
    s.set_policy("state", ServePolicy::at_version(0));
    CHECK(s.load("state") == v1);
  }

  SUBCASE("out-of-range version reads as not found") {
    s.store("state", v1);
    s.set_policy("state", ServePolicy::at_version(5));
    CHECK_FALSE(s.load("state").has_value());
  }

  SUBCASE("corruption mutates reads, never history") {
    s.store("state", v1);
    s.set_policy("state", ServePolicy::corrupt([](Bytes& b) { b[0] ^= 0xff; }));
    Bytes got = *s.load("state");
    CHECK(got != v1);
    CHECK(s.version("state", 0) == v1);
  }

  SUBCASE("policies are per-tag") {
    s.store("state", v1);
    s.store("data", v2);
    s.set_policy("state", ServePolicy::corrupt([](Bytes& b) { b[0] ^= 0xff; }));
    CHECK(s.load("data") == v2);
  }

  SUBCASE("load of a never-stored tag is not found") {
    CHECK_FALSE(s.load("nothing").has_value());
  }
}

}  // namespace

TEST_CASE("in-memory versioned store") {
  VersionedStore s;
  exercise_store(s);
}

TEST_CASE("file-backed store behaves identically") {
  auto dir = std::filesystem::temp_directory_path() /
             ("elephantdp-store-test-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  {
    FileStore s(dir);
    exercise_store(s);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("file store persists history across instances") {
  auto dir = std::filesystem::temp_directory_path() /
             ("elephantdp-store-persist-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  {
    FileStore s(dir);
    s.store("state", bytes_of("a"));
    s.store("state", bytes_of("b"));
  }
  {
    FileStore s(dir);
    CHECK(s.history_size("state") == 2);
    CHECK(s.load("state") == bytes_of("b"));
    CHECK(s.version("state", 0) == bytes_of("a"));
  }
  std::filesystem::remove_all(dir);
}
