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

// A differentially-private query server whose privacy budget survives
// crashes and resists rollback, fork and replay, plus the adversarial
// simulator used to demonstrate those attacks against insecure baselines.

#include "elephantdp/analyst.hpp"
#include "elephantdp/baselines.hpp"
#include "elephantdp/bench.hpp"
#include "elephantdp/bytes.hpp"
#include "elephantdp/codec.hpp"
#include "elephantdp/crypto.hpp"
#include "elephantdp/dataset.hpp"
#include "elephantdp/enclave.hpp"
#include "elephantdp/harness.hpp"
#include "elephantdp/keyservice.hpp"
#include "elephantdp/mechanism.hpp"
#include "elephantdp/noise.hpp"
#include "elephantdp/protocol_state.hpp"
#include "elephantdp/query.hpp"
#include "elephantdp/rng.hpp"
#include "elephantdp/scm.hpp"
#include "elephantdp/scm_wire.hpp"
#include "elephantdp/storage.hpp"
#include "elephantdp/trace.hpp"
#include "elephantdp/transcript.hpp"
