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

#include <set>

#include "elephantdp/analyst.hpp"
#include "elephantdp/codec.hpp"
#include "elephantdp/protocol_state.hpp"
#include "elephantdp/query.hpp"
#include "elephantdp/rng.hpp"

using namespace elephantdp;

TEST_CASE("writer/reader round-trip primitives") {
  Writer w;
  w.u8(0xab);
  w.u64(0x1122334455667788ull);
  w.f64(-3.25);
  w.bytes({1, 2, 3});
  w.str("hello");
  Bytes buf = w.take();

  Reader r(buf);
  CHECK(r.u8() == 0xab);
  CHECK(r.u64() == 0x1122334455667788ull);
  CHECK(r.f64() == -3.25);
  CHECK(r.bytes() == Bytes{1, 2, 3});
  CHECK(r.str() == "hello");
  CHECK(r.done());
}

TEST_CASE("reader rejects truncated and trailing input") {
  Writer w;
  w.u64(7);
  Bytes buf = w.take();
  buf.pop_back();
  Reader r(buf);
  CHECK_THROWS_AS(r.u64(), CodecError);

  Writer w2;
  w2.u8(1);
  w2.u8(2);
  Bytes buf2 = w2.take();
  Reader r2(buf2);
  r2.u8();
  CHECK_THROWS_AS(r2.expect_done(), CodecError);
}

TEST_CASE("query encoding round-trips") {
  DetRng rng(7);
  for (int i = 0; i < 200; ++i) {
    Query q;
    q.kind = static_cast<QueryKind>(1 + rng.below(4));
    q.column_a = "col" + std::to_string(rng.below(50));
    q.column_b = q.kind == QueryKind::kCor ? "col" + std::to_string(rng.below(50)) : "";
    q.predicate_value = rng.uniform() * 100.0 - 50.0;
    q.epsilon = rng.uniform() + 0.01;
    CHECK(Query::decode(q.encode()) == q);
  }
}

TEST_CASE("distinct values encode to distinct byte strings") {
  DetRng rng(11);
  std::set<Bytes> seen;
  for (int i = 0; i < 500; ++i) {
    Query q = Query::count("c" + std::to_string(i % 7), static_cast<double>(i), 1.0 + i * 0.5);
    seen.insert(q.encode());
  }
  CHECK(seen.size() == 500);

  // length-prefixing keeps adjacent string fields from bleeding together
  Query a = Query::cor("ab", "c", 1.0);
  Query b = Query::cor("a", "bc", 1.0);
  CHECK(a.encode() != b.encode());
}

TEST_CASE("answer wire width is constant") {
  CHECK(Answer::bottom().encode().size() == Answer::kWireSize);
  CHECK(Answer::of(0.0).encode().size() == Answer::kWireSize);
  CHECK(Answer::of(1e308).encode().size() == Answer::kWireSize);
  CHECK(Answer::of(-1e-308).encode().size() == Answer::kWireSize);

  Writer w;
  Answer::of(12.5).encode_to(w);
  Bytes b = w.take();
  Reader r(b);
  CHECK(Answer::decode_from(r) == Answer::of(12.5));
}

TEST_CASE("protocol state plaintext round-trips") {
  ProtocolState s;
  s.q = Query::avg("age", 1.0);
  s.a = Answer::of(41.25);
  s.budget = 7.5;
  ProtocolState back = decode_state_plaintext(encode_state_plaintext(s));
  CHECK(back.q == s.q);
  CHECK(back.a == s.a);
  CHECK(back.budget == s.budget);

  ProtocolState fresh;  // bottom || bottom || B
  fresh.budget = 10.0;
  ProtocolState back2 = decode_state_plaintext(encode_state_plaintext(fresh));
  CHECK_FALSE(back2.q.has_value());
  CHECK(back2.a.is_bottom);
}

TEST_CASE("analyst tuple round-trips") {
  AnalystTuple t{42, Query::cor("age", "income", 0.5), Answer::of(0.25)};
  AnalystTuple back = decode_analyst_tuple(encode_analyst_tuple(t));
  CHECK(back.id == t.id);
  CHECK(back.q == t.q);
  CHECK(back.a == t.a);
}
