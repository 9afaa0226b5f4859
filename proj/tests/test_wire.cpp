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

#include "elephantdp/analyst.hpp"
#include "elephantdp/enclave.hpp"
#include "elephantdp/scm_wire.hpp"

using namespace elephantdp;

TEST_CASE("request encoding uses the fixed message types and round-trips") {
  ScmRequest get{kScmWireGet, Nonce::generate(), 0, {}};
  Bytes frame = encode_scm_request(get);
  CHECK(frame[0] == 0x02);
  ScmRequest back = decode_scm_request(frame);
  CHECK(back.type == kScmWireGet);
  CHECK(back.nonce == get.nonce);

  ScmRequest init{kScmWireInit, Nonce::generate(), 0, bytes_of("s0")};
  CHECK(encode_scm_request(init)[0] == 0x01);
  CHECK(decode_scm_request(encode_scm_request(init)).newstate == bytes_of("s0"));

  ScmRequest update{kScmWireUpdate, Nonce::generate(), 9, bytes_of("s9")};
  Bytes uframe = encode_scm_request(update);
  CHECK(uframe[0] == 0x03);
  ScmRequest uback = decode_scm_request(uframe);
  CHECK(uback.id == 9);
  CHECK(uback.newstate == bytes_of("s9"));

  Bytes junk{0x07};
  CHECK_THROWS_AS(decode_scm_request(junk), CodecError);
}

TEST_CASE("reply encoding round-trips and transports protocol errors") {
  SingleNodeScm scm(ScmKeys::generate());
  Nonce n = Nonce::generate();

  // not initialized travels as an unsigned error frame
  Bytes err = dispatch_scm_frame(scm, encode_scm_request({kScmWireGet, n, 0, {}}));
  CHECK_THROWS_AS(decode_scm_reply(err), NotInitializedError);

  ScmReply direct = scm.init_state(n, bytes_of("s0"));
  ScmReply wired = decode_scm_reply(encode_scm_reply(direct));
  CHECK(wired.id == direct.id);
  CHECK(wired.curstate == direct.curstate);
  CHECK(wired.sig == direct.sig);
  CHECK(check_state_reply(scm.verify_key(), wired, n) == ReplyCheck::kOk);
}

TEST_CASE("in-simulation codec transport preserves the contract") {
  SingleNodeScm scm(ScmKeys::generate());
  ScmCodecClient client(scm);
  Nonce n = Nonce::generate();
  ScmReply r = client.init_state(n, bytes_of("s0"));
  CHECK(check_state_reply(client.verify_key(), r, n) == ReplyCheck::kOk);
  CHECK(client.update_state(Nonce::generate(), 1, bytes_of("s1")).msg == kScmAckMsg);
  CHECK(client.update_state(Nonce::generate(), 1, bytes_of("s1")).msg == kScmErrorMsg);
  CHECK(client.get_state(Nonce::generate()).id == 1);
  CHECK_THROWS_AS(client.init_state(Nonce::generate(), bytes_of("x")),
                  AlreadyInitializedError);
}

TEST_CASE("loopback TCP transport is byte-compatible with the in-sim one") {
  SingleNodeScm scm(ScmKeys::generate());
  ScmTcpServer server(scm);
  ScmTcpClient tcp(server.port(), scm.verify_key());
  ScmCodecClient local(scm);

  Nonce n = Nonce::generate();
  ScmReply r = tcp.init_state(n, bytes_of("s0"));
  CHECK(check_state_reply(tcp.verify_key(), r, n) == ReplyCheck::kOk);

  CHECK(tcp.update_state(Nonce::generate(), 1, bytes_of("s1")).msg == kScmAckMsg);

  // the same logical request gives byte-identical reply bodies on both paths
  Nonce shared = Nonce::generate();
  ScmReply via_tcp = tcp.get_state(shared);
  ScmReply via_local = local.get_state(shared);
  CHECK(encode_scm_reply(via_tcp) == encode_scm_reply(via_local));

  CHECK_THROWS_AS(tcp.init_state(Nonce::generate(), bytes_of("x")), AlreadyInitializedError);
  server.stop();
}

TEST_CASE("tcp cluster backend reports quorum loss") {
  ScmCluster cluster(3);
  ScmTcpServer server(cluster);
  ScmTcpClient tcp(server.port(), cluster.verify_key());
  tcp.init_state(Nonce::generate(), bytes_of("s0"));
  cluster.crash_node(0);
  cluster.crash_node(1);
  CHECK_THROWS_AS(tcp.get_state(Nonce::generate()), NoQuorumError);
  server.stop();
}

TEST_CASE("analyst tuples ride the tcp channel unchanged") {
  AnalystTcpCollector collector;
  {
    AnalystTcpSink sink(collector.port());
    AnalystTuple t{1, Query::avg("age", 1.0), Answer::of(41.5)};
    sink.deliver(encode_analyst_tuple(t));
    AnalystTuple t2{2, Query::count("age", 30, 1.0), Answer::bottom()};
    sink.deliver(encode_analyst_tuple(t2));
  }
  for (int spin = 0; spin < 100 && collector.log().size() < 2; ++spin) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  auto tuples = collector.log().tuples();
  REQUIRE(tuples.size() == 2);
  CHECK(tuples[0].id == 1);
  CHECK(tuples[0].a == Answer::of(41.5));
  CHECK(tuples[1].a.is_bottom);
  collector.stop();
}

TEST_CASE("a full protocol round over both tcp channels") {
  seed_process_randomness(404);
  Dataset ds = Dataset::from_columns({{"age", {30, 40, 50, 60}}}, {{"age", {0, 100}}});
  VersionedStore storage;
  KeyService keys;
  SingleNodeScm scm_backend(ScmKeys::generate());
  ScmTcpServer scm_server(scm_backend);
  ScmTcpClient scm(scm_server.port(), scm_backend.verify_key());
  AnalystTcpCollector analyst_server;
  AnalystTcpSink analyst(analyst_server.port());

  SetupOptions opt;
  setup_deployment(ds, 5.0, scm, storage, keys, nullptr, opt);
  NoisePolicy noise = NoisePolicy::per_instance(1);
  noise.zero_noise = true;
  Enclave e(EnclaveEnv{&scm, &storage, &keys, &analyst, nullptr}, opt.measurement, noise, 0);
  REQUIRE(e.init() == Phase::kReady);
  e.reply_query(Query::avg("age", 1.0));

  for (int spin = 0; spin < 200 && analyst_server.log().size() < 1; ++spin) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  auto tuples = analyst_server.log().tuples();
  REQUIRE(tuples.size() == 1);
  CHECK(tuples[0].id == 1);
  CHECK(tuples[0].a == Answer::of(45.0));
  CHECK(scm_backend.current_id() == 1);
  analyst_server.stop();
  scm_server.stop();
}
