// Copyright 2026 The mgsim2 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Test rig for the thread manager: a real network and memory, with the
// cores replaced by explicit start/terminate calls.

#include <map>
#include <tuple>
#include <vector>

#include "mgsim2/memory.hpp"
#include "mgsim2/noc.hpp"
#include "mgsim2/tmu.hpp"

namespace mgsim2::testing {

struct Write {
  Cycle cycle;
  RegRef dst;
  Word value;
};

class TmuRig {
 public:
  explicit TmuRig(int cores, TopologyKind kind = TopologyKind::RING)
      : noc({kind, cores, 2}),
        memory(cores, 1u << 16, CacheConfig{}, CoherencyPolicy::BULK),
        tmu(cores, noc, memory, [this](RegRef r, Word v) {
          writes.push_back({now, r, v});
        }) {
    root = tmu.create_root(0, 0, 0);
    start_all();
  }

  // Advances one cycle: NoC deliveries first, then local completions.
  void step() {
    ++now;
    for (const auto& m : noc.step(now)) {
      delivered.push_back(m);
      tmu.deliver(m, now);
    }
    tmu.tick(now);
  }

  void run(int cycles) {
    for (int i = 0; i < cycles; ++i) step();
  }

  // Places every queued thread start on the next free slot of its core.
  std::vector<std::tuple<CoreId, SlotId, ThreadStart>> start_all() {
    std::vector<std::tuple<CoreId, SlotId, ThreadStart>> out;
    for (CoreId c = 0; c < noc.topology().cores; ++c) {
      while (tmu.has_pending_start(c)) {
        auto s = tmu.pop_start(c);
        const SlotId slot = next_slot[c]++;
        tmu.thread_started(c, slot, s);
        out.emplace_back(c, slot, s);
      }
    }
    return out;
  }

  AllocId allocate(int size, int hint = -1) {
    const std::size_t before = writes.size();
    tmu.request_allocate({0, 0, 1}, size, hint, now);
    while (writes.size() == before) step();
    return static_cast<AllocId>(writes.back().value);
  }

  FamilyId create(AllocId alloc, std::int64_t start, std::int64_t limit,
                  std::int64_t step_by = 1) {
    CreateRequest req;
    req.core = 0;
    req.creator_family = root;
    req.alloc = alloc;
    req.start = start;
    req.limit = limit;
    req.step = step_by;
    req.reply = {0, 0, 2};
    return tmu.create_family(req, now);
  }

  ControlNetwork noc;
  MemorySystem memory;
  ThreadManager tmu;
  std::vector<Write> writes;
  std::vector<ControlMessage> delivered;
  std::map<CoreId, SlotId> next_slot;
  FamilyId root = 0;
  Cycle now = 0;
};

}  // namespace mgsim2::testing
