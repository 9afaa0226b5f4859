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

#include <array>
#include <cstdio>
#include <string>

#include "elephantdp/bytes.hpp"
#include "elephantdp/codec.hpp"

namespace elephantdp {

// Failure probability of the Gaussian calibration. Budget accounting tracks
// epsilon only; delta is a fixed system-wide constant.
inline constexpr double kGlobalDelta = 1e-5;

enum class QueryKind : uint8_t {
  kCount = 1,  // #records with column == value
  kAvg = 2,    // sample mean of a column
  kVar = 3,    // sample variance of a column
  kCor = 4,    // Pearson correlation of two columns
};

inline const char* kind_name(QueryKind k) {
  switch (k) {
    case QueryKind::kCount: return "count";
    case QueryKind::kAvg: return "avg";
    case QueryKind::kVar: return "var";
    case QueryKind::kCor: return "cor";
  }
  return "?";
}

struct Query {
  QueryKind kind = QueryKind::kCount;
  std::string column_a;
  std::string column_b;          // kCor only
  double predicate_value = 0.0;  // kCount only
  double epsilon = 1.0;

  static Query count(std::string column, double value, double eps) {
    return Query{QueryKind::kCount, std::move(column), "", value, eps};
  }
  static Query avg(std::string column, double eps) {
    return Query{QueryKind::kAvg, std::move(column), "", 0.0, eps};
  }
  static Query var(std::string column, double eps) {
    return Query{QueryKind::kVar, std::move(column), "", 0.0, eps};
  }
  static Query cor(std::string column_a, std::string column_b, double eps) {
    return Query{QueryKind::kCor, std::move(column_a), std::move(column_b), 0.0, eps};
  }

  Bytes encode() const {
    Writer w;
    w.u8(static_cast<uint8_t>(kind));
    w.str(column_a);
    w.str(column_b);
    w.f64(predicate_value);
    w.f64(epsilon);
    return w.take();
  }

  static Query decode_from(Reader& r) {
    Query q;
    q.kind = static_cast<QueryKind>(r.u8());
    q.column_a = r.str();
    q.column_b = r.str();
    q.predicate_value = r.f64();
    q.epsilon = r.f64();
    return q;
  }

  static Query decode(const Bytes& in) {
    Reader r(in);
    Query q = decode_from(r);
    r.expect_done();
    return q;
  }

  std::string describe() const {
    char buf[160];
    switch (kind) {
      case QueryKind::kCount:
        std::snprintf(buf, sizeof(buf), "count(%s==%.17g,eps=%.17g)", column_a.c_str(),
                      predicate_value, epsilon);
        break;
      case QueryKind::kAvg:
        std::snprintf(buf, sizeof(buf), "avg(%s,eps=%.17g)", column_a.c_str(), epsilon);
        break;
      case QueryKind::kVar:
        std::snprintf(buf, sizeof(buf), "var(%s,eps=%.17g)", column_a.c_str(), epsilon);
        break;
      case QueryKind::kCor:
        std::snprintf(buf, sizeof(buf), "cor(%s,%s,eps=%.17g)", column_a.c_str(),
                      column_b.c_str(), epsilon);
        break;
    }
    return buf;
  }

  bool operator==(const Query&) const = default;
};

// Noisy response, or the distinguished bottom symbol when the budget was not
// enough. The serialized width is a constant 9 bytes (1 tag + 8 value)
// whatever the value, which is the padding the analyst-visible channel needs.
struct Answer {
  bool is_bottom = true;
  double value = 0.0;

  static Answer bottom() { return Answer{}; }
  static Answer of(double v) { return Answer{false, v}; }

  static constexpr size_t kWireSize = 9;

  std::array<uint8_t, kWireSize> encode() const {
    std::array<uint8_t, kWireSize> out{};
    out[0] = is_bottom ? 0x00 : 0x01;
    uint64_t bits = is_bottom ? 0 : std::bit_cast<uint64_t>(value);
    for (int i = 0; i < 8; ++i) out[1 + i] = static_cast<uint8_t>(bits >> (8 * i));
    return out;
  }

  void encode_to(Writer& w) const {
    auto e = encode();
    w.raw(e.data(), e.size());
  }

  static Answer decode_from(Reader& r) {
    Bytes raw = r.raw(kWireSize);
    Answer a;
    a.is_bottom = raw[0] == 0x00;
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(raw[1 + i]) << (8 * i);
    a.value = a.is_bottom ? 0.0 : std::bit_cast<double>(bits);
    return a;
  }

  std::string describe() const {
    if (is_bottom) return "bottom";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
  }

  bool operator==(const Answer&) const = default;
};

}  // namespace elephantdp
