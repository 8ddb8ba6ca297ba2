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

#include <map>

#include "doctest.h"
#include "mgsim2/kernels.hpp"
#include "mgsim2/oracle.hpp"
#include "mgsim2/sim.hpp"

using namespace mgsim2;

namespace {

ChipConfig chip(int cores, bool hints = true,
                CoherencyPolicy policy = CoherencyPolicy::BULK) {
  ChipConfig c;
  c.cores = cores;
  c.hints = hints;
  c.coherency = policy;
  return c;
}

RunResult run_source(const std::string& src, ChipConfig config) {
  return run(config, annotate_hints(assemble(src)));
}

Word word_at(const std::vector<Word>& image, Word addr) { return image[addr / 4]; }

}  // namespace

TEST_CASE("chip config validation") {
  ChipConfig c;
  c.cores = 0;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  c = ChipConfig{};
  c.watchdog_cycles = 0;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  CHECK_NOTHROW(ChipConfig{}.check());
}

TEST_CASE("a lone HALT completes with one commit") {
  auto r = run_source("halt\n", chip(1));
  CHECK(r.outcome == Outcome::COMPLETED);
  CHECK(r.metrics.commits == 1);
  REQUIRE(r.final_memory.has_value());
  CHECK(r.metrics.families == 1);
}

TEST_CASE("regular kernel gives the same image on 1 and 4 cores") {
  auto k = kernels::regular(64);
  auto p1 = run(chip(1), k.program());
  auto p4 = run(chip(4), k.program());
  REQUIRE(p1.outcome == Outcome::COMPLETED);
  REQUIRE(p4.outcome == Outcome::COMPLETED);
  CHECK(*p1.final_memory == *p4.final_memory);
  CHECK(*p1.final_memory == k.expected);
}

TEST_CASE("dataflow deadlocks") {
  SUBCASE("parent waits on a child that waits on the parent") {
    auto r = run(chip(2), kernels::channel_cycle().program());
    CHECK(r.outcome == Outcome::DEADLOCK_DATAFLOW);
    CHECK(r.diagnostic == "cycle in the waits-for graph");
    CHECK_FALSE(r.final_memory.has_value());
  }
  SUBCASE("sibling chain behind an unsent seed") {
    auto r = run_source(
        "addi r2, r0, 0\naddi r3, r0, 2\n"
        "create r4, r0, r2, r3, 1, f\nbne r4, r0, go\n"
        "go: sync r5, r4\nbne r5, r0, done\n"
        "done: putsh r0, r4\nhalt\n"
        ".body f\ngetsh r1\nputsh r1\nhalt\n",
        chip(1));
    CHECK(r.outcome == Outcome::DEADLOCK_DATAFLOW);
  }
  SUBCASE("waiting on a register nobody will write") {
    auto r = run_source(
        "addi r2, r0, 0\naddi r3, r0, 1\n"
        "create r4, r0, r2, r3, 1, f\nbne r4, r0, go\n"
        "go: getsh r6, r4\nst r6, 0(r0)\nhalt\n"
        ".body f\nhalt\n",
        chip(1));
    CHECK(r.outcome == Outcome::DEADLOCK_DATAFLOW);
  }
}

TEST_CASE("starvation deadlock") {
  auto r = run(chip(2), kernels::starvation(2).program());
  CHECK(r.outcome == Outcome::DEADLOCK_STARVATION);
  CHECK(r.metrics.cycles < ChipConfig{}.watchdog_cycles);
  CHECK(r.metrics.allocations_denied >= 64);
}

TEST_CASE("detect_deadlock classification") {
  WaitSnapshot s;
  CHECK(detect_deadlock(s) == DeadlockKind::NONE);
  // Two families, each holding half the chip and retrying for one more core,
  // with their parent suspended on sync of both.
  s.threads = {{true, false, false, {1, 2}},
               {false, true, false, {}},
               {false, true, false, {}}};
  CHECK(detect_deadlock(s) == DeadlockKind::STARVATION);
  s.transactions_in_flight = true;
  CHECK(detect_deadlock(s) == DeadlockKind::NONE);
  s.transactions_in_flight = false;
  s.threads.push_back({false, false, false, {}});
  CHECK(detect_deadlock(s) == DeadlockKind::NONE);

  WaitSnapshot cyc;
  cyc.threads = {{true, false, false, {1}}, {true, false, false, {0}}};
  CHECK(detect_deadlock(cyc) == DeadlockKind::DATAFLOW);
  CHECK(has_wait_cycle(cyc));
  WaitSnapshot dangling;
  dangling.threads = {{true, false, true, {}}};
  CHECK(detect_deadlock(dangling) == DeadlockKind::DATAFLOW);
  CHECK_FALSE(has_wait_cycle(dangling));
}

TEST_CASE("watchdog") {
  auto c = chip(1);
  c.watchdog_cycles = 500;
  auto r = run_source("top: addi r1, r1, 1\njmp top\n", c);
  CHECK(r.outcome == Outcome::WATCHDOG_TIMEOUT);
  CHECK(r.metrics.cycles == 500);
}

TEST_CASE("faults carry diagnostics") {
  SUBCASE("double release") {
    auto r = run_source(
        "a: allocate r1, 1\nbeq r1, r0, a\nrelease r1\nrelease r1\nhalt\n",
        chip(1));
    CHECK(r.outcome == Outcome::FAULT);
    CHECK(r.diagnostic.find("release") != std::string::npos);
  }
  SUBCASE("memory fault") {
    auto r = run_source("ld r1, 2(r0)\nhalt\n", chip(1));
    CHECK(r.outcome == Outcome::FAULT);
    CHECK(r.diagnostic.find("unaligned") != std::string::npos);
  }
  SUBCASE("sync twice") {
    auto r = run_source(
        "create r4, r0, r0, r0, 1, f\nbne r4, r0, go\n"
        "go: sync r5, r4\nsync r6, r4\nhalt\n.body f\nhalt\n",
        chip(1));
    CHECK(r.outcome == Outcome::FAULT);
  }
  SUBCASE("release with a live family") {
    auto r = run_source(
        "a: allocate r1, 1\nbeq r1, r0, a\naddi r3, r0, 1\n"
        "create r4, r1, r0, r3, 1, f\nbne r4, r0, go\ngo: release r1\nhalt\n"
        ".body f\naddi r1, r0, 50\nspin: addi r1, r1, -1\nbne r1, r0, spin\n"
        "halt\n",
        chip(1));
    CHECK(r.outcome == Outcome::FAULT);
    CHECK(r.diagnostic.find("live family") != std::string::npos);
  }
  SUBCASE("invalid program") {
    auto r = run_source("create r1, r0, r0, r0, 1, nowhere\nhalt\n", chip(1));
    CHECK(r.outcome == Outcome::FAULT);
    CHECK(r.diagnostic.find("unknown entry 'nowhere'") != std::string::npos);
  }
}

TEST_CASE("slot multiplexing: N=100 on 2 cores with 8 slots") {
  const std::string src =
      "a: allocate r1, 0\nbeq r1, r0, a\naddi r3, r0, 100\n"
      "create r4, r1, r0, r3, 1, f\nbne r4, r0, go\n"
      "go: sync r5, r4\nbne r5, r0, done\ndone: release r1\nhalt\n"
      ".body f\ngetidx r1\naddi r2, r0, 4\nmul r3, r1, r2\naddi r5, r1, 1\n"
      "st r5, 0x1000(r3)\nhalt\n";
  auto c = chip(2);
  c.thread_slots = 8;
  c.trace = true;
  auto r = run_source(src, c);
  REQUIRE(r.outcome == Outcome::COMPLETED);
  auto oracle = sequential_oracle(annotate_hints(assemble(src)));
  CHECK(*r.final_memory == oracle.memory);
  std::map<std::int64_t, CoreId> core_of;
  for (const auto& rec : r.trace) {
    if (rec.family != 1) continue;
    CHECK(rec.slot < 8);
    core_of[rec.index] = rec.core;
  }
  REQUIRE(core_of.size() == 100);
  for (const auto& [index, core] : core_of) CHECK(core == (index < 50 ? 0 : 1));
}

TEST_CASE("BULK stores stay invisible to a concurrent reader family") {
  // Writer stores then spins; a reader created before the writer's sync
  // loads the same word; a second reader runs after the sync.
  const std::string src =
      "addi r1, r0, 1\n"
      "create r4, r0, r0, r1, 1, writer\nbne r4, r0, w\n"
      "w: addi r1, r0, 1\n"
      "create r6, r0, r0, r1, 1, early\nbne r6, r0, e\n"
      "e: sync r7, r6\nbne r7, r0, e2\n"
      "e2: sync r5, r4\nbne r5, r0, s\n"
      "s: create r8, r0, r0, r1, 1, late\nbne r8, r0, l\n"
      "l: sync r9, r8\nbne r9, r0, end\nend: halt\n"
      ".body writer\naddi r1, r0, 5\nst r1, 0x100(r0)\naddi r2, r0, 300\n"
      "spin: addi r2, r2, -1\nbne r2, r0, spin\nhalt\n"
      ".body early\nld r1, 0x100(r0)\nst r1, 0x200(r0)\nhalt\n"
      ".body late\nld r1, 0x100(r0)\nst r1, 0x204(r0)\nhalt\n";
  auto bulk = run_source(src, chip(1, true, CoherencyPolicy::BULK));
  REQUIRE(bulk.outcome == Outcome::COMPLETED);
  CHECK(word_at(*bulk.final_memory, 0x100) == 5);
  CHECK(word_at(*bulk.final_memory, 0x200) == 0);
  CHECK(word_at(*bulk.final_memory, 0x204) == 5);
  auto eager = run_source(src, chip(1, true, CoherencyPolicy::EAGER));
  REQUIRE(eager.outcome == Outcome::COMPLETED);
  CHECK(word_at(*eager.final_memory, 0x200) == 5);
  CHECK(word_at(*eager.final_memory, 0x204) == 5);
}

TEST_CASE("memory operation counts match the oracle on one thread") {
  const std::string src =
      ".data 0x400\n.word 3, 4, 5, 6\n"
      "addi r1, r0, 4\n"
      "loop: addi r1, r1, -1\naddi r2, r0, 4\nmul r3, r1, r2\n"
      "ld r4, 0x400(r3)\nadd r4, r4, r4\nst r4, 0x800(r3)\nbne r1, r0, loop\n"
      "halt\n";
  auto program = annotate_hints(assemble(src));
  auto o = sequential_oracle(program);
  auto r = run(chip(1), program);
  REQUIRE(r.outcome == Outcome::COMPLETED);
  CHECK(r.metrics.loads == o.loads);
  CHECK(r.metrics.stores == o.stores);
  CHECK(*r.final_memory == o.memory);
}

TEST_CASE("per-thread commit order equals the oracle trace") {
  auto k = kernels::chain(16);
  auto program = k.program();
  auto o = sequential_oracle(program);
  for (int p : {1, 3, 4}) {
    auto c = chip(p);
    c.trace = true;
    auto r = run(c, program);
    REQUIRE(r.outcome == Outcome::COMPLETED);
    std::map<std::pair<FamilyId, std::int64_t>, std::vector<int>> sim;
    for (const auto& rec : r.trace) sim[{rec.family, rec.index}].push_back(rec.pc);
    std::map<std::pair<FamilyId, std::int64_t>, std::vector<int>> ref;
    for (const auto& t : o.traces) ref[{t.family, t.index}] = t.pcs;
    CHECK(sim == ref);
  }
}

TEST_CASE("metrics invariants and determinism") {
  for (const auto& k : kernels::corpus()) {
    for (int p : {1, 2, 4}) {
      auto c = chip(p);
      c.trace = true;
      auto a = run(c, k.program());
      auto b = run(c, k.program());
      CHECK(serialize(a) == serialize(b));
      CHECK(a.metrics.utilization >= 0.0);
      CHECK(a.metrics.utilization <= 1.0);
      for (const auto& core : a.metrics.per_core) {
        CHECK(core.commits <= a.metrics.cycles);
        CHECK(core.utilization <= 1.0);
      }
      CHECK(a.metrics.max_pending_per_thread <= kMaxPendingPerThread);
      CHECK(a.outcome != Outcome::WATCHDOG_TIMEOUT);
      CHECK(a.outcome != Outcome::FAULT);
    }
  }
}

TEST_CASE("no lost wakeups in completed runs") {
  auto program = kernels::loaduse(4).program();
  Chip c(chip(1), program);
  auto r = c.run();
  REQUIRE(r.outcome == Outcome::COMPLETED);
  CHECK(c.core(0).live_threads() == 0);
  CHECK(c.tmu().all_complete());
  CHECK(c.noc().injected() == c.noc().delivered());
  CHECK(c.quiescent());
}

TEST_CASE("allocation requests pair with responses") {
  auto k = kernels::starvation_sequential();
  auto program = k.program();
  Chip sim(chip(2), program);
  auto r = sim.run();
  REQUIRE(r.outcome == Outcome::COMPLETED);
  CHECK(*r.final_memory == k.expected);
  CHECK(sim.noc().in_flight() == 0);
  CHECK(sim.tmu().allocations_granted() + sim.tmu().allocations_denied() > 2);
}

TEST_CASE("trace line format") {
  auto c = chip(1);
  c.trace = true;
  auto r = run_source("addi r1, r0, 1\nhalt\n", c);
  REQUIRE(r.trace.size() == 2);
  const auto line = format_trace_line(r.trace[1]);
  CHECK(line == std::to_string(r.trace[1].cycle) + " 0 0 0 0 1 halt");
  CHECK(format_trace(r.trace) ==
        format_trace_line(r.trace[0]) + "\n" + line + "\n");
}
