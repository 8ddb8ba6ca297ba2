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

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mgsim2/core.hpp"
#include "mgsim2/isa.hpp"
#include "mgsim2/memory.hpp"
#include "mgsim2/noc.hpp"
#include "mgsim2/tmu.hpp"

namespace mgsim2 {

struct ChipConfig {
  int cores = 1;
  TopologyKind topology = TopologyKind::RING;
  int hop_latency = 2;
  int thread_slots = 64;
  CacheConfig cache;
  bool hints = true;
  CoherencyPolicy coherency = CoherencyPolicy::BULK;
  Cycle watchdog_cycles = 10'000'000;
  std::size_t memory_bytes = 1u << 20;
  // Consecutive denied allocations after which a thread counts as starving.
  int starvation_threshold = 64;
  bool trace = false;

  // Throws std::invalid_argument when a field is out of range.
  void check() const;
};

enum class Outcome {
  COMPLETED,
  DEADLOCK_STARVATION,
  DEADLOCK_DATAFLOW,
  WATCHDOG_TIMEOUT,
  FAULT,
};

const char* to_string(Outcome outcome);

struct CoreMetrics {
  std::uint64_t commits = 0;
  std::uint64_t bubbles = 0;
  std::uint64_t flushes = 0;
  std::uint64_t switch_events = 0;
  std::uint64_t suspends = 0;
  std::uint64_t busy_cycles = 0;
  double utilization = 0.0;
};

struct Metrics {
  Cycle cycles = 0;
  std::vector<CoreMetrics> per_core;
  std::uint64_t commits = 0;
  std::uint64_t bubbles = 0;
  std::uint64_t flushes = 0;
  std::uint64_t switch_events = 0;
  double utilization = 0.0;  // mean over cores
  std::uint64_t propagation_messages = 0;
  std::uint64_t control_messages = 0;
  std::uint64_t hop_traversals = 0;
  std::uint64_t loads = 0;
  std::uint64_t stores = 0;
  std::uint64_t d_misses = 0;
  std::uint64_t i_misses = 0;
  std::uint64_t allocations_denied = 0;
  std::uint64_t families = 0;
  int max_pending_per_thread = 0;
};

// Control traffic attributed to one family, for adjacency audits.
struct FamilyTraffic {
  FamilyId family = 0;
  CoreId owner = 0;
  CoreId span_first = 0;
  int span_size = 1;
  std::map<Link, std::uint64_t> hops;
};

struct RunResult {
  Metrics metrics;
  std::optional<std::vector<Word>> final_memory;
  Outcome outcome = Outcome::FAULT;
  std::string diagnostic;
  std::vector<CommitRecord> trace;
  std::map<Link, std::uint64_t> hop_log;
  std::vector<FamilyTraffic> family_traffic;
};

// Canonical byte serialization used for determinism checks.
std::string serialize(const RunResult& result);

// `cycle core slot family index pc opcode`
std::string format_trace_line(const CommitRecord& record);
std::string format_trace(const std::vector<CommitRecord>& trace);

// Waits-for snapshot over live threads, the input of deadlock classification.
struct WaitNode {
  bool suspended = false;  // not schedulable: suspended or halting
  bool starving = false;   // retrying denied allocations
  bool dangling = false;   // waits on a value no thread can still produce
  std::vector<int> waits_on;
};

struct WaitSnapshot {
  std::vector<WaitNode> threads;
  // Outstanding memory fills, TMU completions or non-allocation messages.
  bool transactions_in_flight = false;
};

enum class DeadlockKind { NONE, DATAFLOW, STARVATION };

// STARVATION: every live thread is starving or suspended, at least one is
// starving, and nothing but allocation traffic is in flight. DATAFLOW: every
// live thread is suspended and nothing is in flight (a waits-for cycle or a
// wait on a value that can no longer be produced).
DeadlockKind detect_deadlock(const WaitSnapshot& snapshot);
bool has_wait_cycle(const WaitSnapshot& snapshot);

class Chip : private CoreServices {
 public:
  Chip(ChipConfig config, const Program& program);
  ~Chip() override;

  RunResult run();

  // Single-cycle access for tests.
  void step();
  Cycle now() const { return now_; }
  const MemorySystem& memory() const { return *memory_; }
  const ControlNetwork& noc() const { return *noc_; }
  const ThreadManager& tmu() const { return *tmu_; }
  const Core& core(CoreId id) const { return *cores_[id]; }
  bool completed() const;
  bool quiescent() const;
  WaitSnapshot wait_snapshot() const;
  // Cheap precondition for a starvation verdict.
  bool starvation_possible() const;

 private:
  IcacheStatus icache_probe(CoreId core, int pc) override;
  LoadResult load(CoreId core, Word addr, FamilyId epoch, RegRef dst) override;
  void store(CoreId core, Word addr, Word value, FamilyId epoch) override;
  void allocate(RegRef reply, int size, int hint) override;
  void create(const CreateRequest& req) override;
  void sync(FamilyId family, RegRef target) override;
  void release(AllocId alloc, CoreId issuer) override;
  void putsh(FamilyId family, std::int64_t ordinal, Word value,
             CoreId from) override;
  void putsh_family(FamilyId family, Word value, CoreId from) override;
  void getsh_final(FamilyId family, RegRef dst) override;
  void thread_terminated(CoreId core, SlotId slot) override;
  void committed(const CommitRecord& record) override;

  Metrics collect_metrics() const;

  ChipConfig config_;
  Program program_;
  std::unique_ptr<MemorySystem> memory_;
  std::unique_ptr<ControlNetwork> noc_;
  std::unique_ptr<ThreadManager> tmu_;
  std::vector<std::unique_ptr<Core>> cores_;
  std::vector<CommitRecord> trace_;
  Cycle now_ = 0;
  FamilyId root_ = 0;
};

RunResult run(const ChipConfig& config, const Program& program);

}  // namespace mgsim2
