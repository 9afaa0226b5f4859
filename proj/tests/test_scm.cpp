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

#include <atomic>
#include <set>
#include <thread>

#include "elephantdp/rng.hpp"
#include "elephantdp/scm.hpp"

using namespace elephantdp;

namespace {

Bytes state_of(const std::string& s) { return bytes_of(s); }

}  // namespace

TEST_CASE("single node follows the register contract") {
  SingleNodeScm scm(ScmKeys::generate());
  Nonce n = Nonce::generate();

  SUBCASE("get before init is an error") {
    CHECK_THROWS_AS(scm.get_state(n), NotInitializedError);
    CHECK_THROWS_AS(scm.update_state(n, 1, state_of("x")), NotInitializedError);
  }

  SUBCASE("init sets id 0 and signs over the caller's nonce") {
    ScmReply r = scm.init_state(n, state_of("s0"));
    CHECK(r.id == 0);
    CHECK(r.curstate == state_of("s0"));
    CHECK(check_state_reply(scm.verify_key(), r, n) == ReplyCheck::kOk);
    // checked against a different nonce the same reply is stale
    CHECK(check_state_reply(scm.verify_key(), r, Nonce::generate()) == ReplyCheck::kStaleNonce);
  }

  SUBCASE("second init hits the latch") {
    scm.init_state(n, state_of("s0"));
    CHECK_THROWS_AS(scm.init_state(Nonce::generate(), state_of("again")),
                    AlreadyInitializedError);
  }

  SUBCASE("read-after-init and nonce binding") {
    scm.init_state(n, state_of("s0"));
    Nonce n1 = Nonce::generate();
    Nonce n2 = Nonce::generate();
    ScmReply r1 = scm.get_state(n1);
    ScmReply r2 = scm.get_state(n2);
    CHECK(r1.id == 0);
    CHECK(r1.curstate == state_of("s0"));
    CHECK(r1.curstate == r2.curstate);
    CHECK_FALSE(r1.sig == r2.sig);  // same body, different nonces
  }

  SUBCASE("update accepts exactly the successor id") {
    scm.init_state(n, state_of("s0"));
    ScmReply ok = scm.update_state(Nonce::generate(), 1, state_of("s1"));
    CHECK(ok.msg == kScmAckMsg);
    CHECK(scm.update_state(Nonce::generate(), 1, state_of("dup")).msg == kScmErrorMsg);
    CHECK(scm.update_state(Nonce::generate(), 0, state_of("back")).msg == kScmErrorMsg);
    CHECK(scm.update_state(Nonce::generate(), 5, state_of("skip")).msg == kScmErrorMsg);
    CHECK(scm.get_state(Nonce::generate()).id == 1);
    CHECK(scm.get_state(Nonce::generate()).curstate == state_of("s1"));
  }

  SUBCASE("id counts successful updates") {
    scm.init_state(n, state_of("s0"));
    for (uint64_t k = 1; k <= 7; ++k) {
      CHECK(scm.update_state(Nonce::generate(), k, state_of("s")).msg == kScmAckMsg);
    }
    CHECK(scm.get_state(Nonce::generate()).id == 7);
  }

  SUBCASE("ack replies verify and bind the nonce") {
    scm.init_state(n, state_of("s0"));
    Nonce nu = Nonce::generate();
    ScmReply r = scm.update_state(nu, 1, state_of("s1"));
    CHECK(check_ack_reply(scm.verify_key(), r, nu) == ReplyCheck::kOk);
    CHECK(check_ack_reply(scm.verify_key(), r, Nonce::generate()) == ReplyCheck::kStaleNonce);
    ScmReply forged = r;
    forged.msg = kScmAckMsg;
    forged.sig[0] ^= 1;
    CHECK(check_ack_reply(scm.verify_key(), forged, nu) == ReplyCheck::kBadSignature);
  }
}

TEST_CASE("racing updates for one id: exactly one ack in either order") {
  for (int first = 0; first < 2; ++first) {
    SingleNodeScm scm(ScmKeys::generate());
    scm.init_state(Nonce::generate(), state_of("s0"));
    ScmReply a, b;
    if (first == 0) {
      a = scm.update_state(Nonce::generate(), 1, state_of("from-a"));
      b = scm.update_state(Nonce::generate(), 1, state_of("from-b"));
    } else {
      b = scm.update_state(Nonce::generate(), 1, state_of("from-b"));
      a = scm.update_state(Nonce::generate(), 1, state_of("from-a"));
    }
    CHECK((a.msg == kScmAckMsg) != (b.msg == kScmAckMsg));
    CHECK(scm.get_state(Nonce::generate()).id == 1);
    CHECK(scm.get_state(Nonce::generate()).curstate ==
          (first == 0 ? state_of("from-a") : state_of("from-b")));
  }
}

TEST_CASE("threaded updates keep per-id uniqueness") {
  SingleNodeScm scm(ScmKeys::generate());
  scm.init_state(Nonce::generate(), state_of("s0"));
  std::atomic<int> acks{0};
  auto racer = [&](const char* tag) {
    ScmReply r = scm.update_state(Nonce::generate(), 1, state_of(tag));
    if (r.msg == kScmAckMsg) ++acks;
  };
  std::thread t1(racer, "a"), t2(racer, "b");
  t1.join();
  t2.join();
  CHECK(acks.load() == 1);
  CHECK(scm.get_state(Nonce::generate()).id == 1);
}

TEST_CASE("snapshots restore the register") {
  SingleNodeScm scm(ScmKeys::generate());
  scm.init_state(Nonce::generate(), state_of("s0"));
  scm.update_state(Nonce::generate(), 1, state_of("s1"));
  auto restored = SingleNodeScm::decode_snapshot(scm.encode_snapshot());
  Nonce n = Nonce::generate();
  ScmReply r = restored->get_state(n);
  CHECK(r.id == 1);
  CHECK(r.curstate == state_of("s1"));
  CHECK(check_state_reply(scm.verify_key(), r, n) == ReplyCheck::kOk);
  CHECK_THROWS_AS(restored->init_state(n, state_of("x")), AlreadyInitializedError);
}

TEST_CASE("three-node cluster tolerates one crash, blocks at two") {
  ScmCluster cluster(3);
  cluster.init_state(Nonce::generate(), state_of("s0"));
  CHECK(cluster.update_state(Nonce::generate(), 1, state_of("s1")).msg == kScmAckMsg);

  cluster.crash_node(0);
  CHECK(cluster.update_state(Nonce::generate(), 2, state_of("s2")).msg == kScmAckMsg);
  CHECK(cluster.get_state(Nonce::generate()).id == 2);

  cluster.crash_node(1);
  CHECK_THROWS_AS(cluster.update_state(Nonce::generate(), 3, state_of("s3")), NoQuorumError);
  CHECK_THROWS_AS(cluster.get_state(Nonce::generate()), NoQuorumError);

  // the failed update must not have taken effect anywhere reachable
  cluster.restart_node(0);
  cluster.restart_node(1);
  cluster.recover_node(0);
  cluster.recover_node(1);
  CHECK(cluster.get_state(Nonce::generate()).id == 2);
}

TEST_CASE("crashed node recovers to the highest quorum id") {
  ScmCluster cluster(5);
  cluster.init_state(Nonce::generate(), state_of("s0"));
  cluster.crash_node(4);
  for (uint64_t k = 1; k <= 3; ++k) {
    cluster.update_state(Nonce::generate(), k, state_of("s" + std::to_string(k)));
  }
  // node 4 missed everything; peers now hold ids {3,3,3,3}
  cluster.crash_node(3);
  cluster.update_state(Nonce::generate(), 4, state_of("s4"));  // peers {4,4,4}, node3 at 3
  cluster.restart_node(3);
  cluster.restart_node(4);

  cluster.recover_node(4);
  CHECK(cluster.node(4).id() == 4);
  CHECK(cluster.node(4).curstate() == state_of("s4"));

  cluster.recover_node(3);
  CHECK(cluster.node(3).id() == 4);

  // idempotent
  cluster.recover_node(4);
  CHECK(cluster.node(4).id() == 4);
}

TEST_CASE("recovery at id 0 is the base case") {
  ScmCluster cluster(3);
  cluster.init_state(Nonce::generate(), state_of("s0"));
  cluster.crash_node(2);
  cluster.restart_node(2);
  cluster.recover_node(2);
  CHECK(cluster.node(2).id() == 0);
  CHECK(cluster.node(2).curstate() == state_of("s0"));
}

TEST_CASE("cluster exposes the single-node contract") {
  ScmCluster cluster(3);
  Nonce n = Nonce::generate();
  ScmReply r = cluster.init_state(n, state_of("s0"));
  CHECK(check_state_reply(cluster.verify_key(), r, n) == ReplyCheck::kOk);
  CHECK(cluster.update_state(Nonce::generate(), 1, state_of("s1")).msg == kScmAckMsg);
  CHECK(cluster.update_state(Nonce::generate(), 1, state_of("x")).msg == kScmErrorMsg);
  CHECK(cluster.update_state(Nonce::generate(), 3, state_of("x")).msg == kScmErrorMsg);
  CHECK(cluster.get_state(Nonce::generate()).id == 1);
  CHECK_THROWS_AS(cluster.init_state(Nonce::generate(), state_of("y")),
                  AlreadyInitializedError);
}

TEST_CASE("random crash/recover schedules keep the register monotone and unique") {
  DetRng rng(777);
  for (int trial = 0; trial < 25; ++trial) {
    ScmCluster cluster(5);
    cluster.init_state(Nonce::generate(), state_of("s0"));
    uint64_t committed = 0;
    uint64_t last_read = 0;
    std::set<uint64_t> acked;
    for (int step = 0; step < 60; ++step) {
      switch (rng.below(4)) {
        case 0: {  // attempt the successor (or sometimes a wrong id)
          uint64_t id = rng.chance(0.8) ? committed + 1 : rng.below(committed + 3);
          try {
            ScmReply r = cluster.update_state(Nonce::generate(), id,
                                              state_of("s" + std::to_string(id)));
            if (r.msg == kScmAckMsg) {
              CHECK(id == committed + 1);
              CHECK(acked.insert(id).second);  // at most one ack per id, ever
              committed = id;
            }
          } catch (const NoQuorumError&) {
          }
          break;
        }
        case 1: {  // read; observed ids never decrease
          try {
            ScmReply r = cluster.get_state(Nonce::generate());
            CHECK(r.id >= last_read);
            CHECK(r.id == committed);
            last_read = r.id;
          } catch (const NoQuorumError&) {
          }
          break;
        }
        case 2:
          cluster.crash_node(rng.below(5));
          break;
        default: {
          size_t node = rng.below(5);
          cluster.restart_node(node);
          try {
            cluster.recover_node(node);
            CHECK(cluster.node(node).id() <= committed + 0);
          } catch (const NoQuorumError&) {
          }
          break;
        }
      }
    }
  }
}

TEST_CASE("cluster snapshot round-trips") {
  ScmCluster cluster(3);
  cluster.init_state(Nonce::generate(), state_of("s0"));
  cluster.update_state(Nonce::generate(), 1, state_of("s1"));
  auto restored = ScmCluster::decode_snapshot(cluster.encode_snapshot());
  CHECK(restored->size() == 3);
  CHECK(restored->get_state(Nonce::generate()).id == 1);
  CHECK(restored->update_state(Nonce::generate(), 2, state_of("s2")).msg == kScmAckMsg);
}
