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

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "mgsim2/isa.hpp"
#include "mgsim2/memory.hpp"
#include "mgsim2/tmu.hpp"
#include "mgsim2/types.hpp"

namespace mgsim2 {

enum class CellState : std::uint8_t { FULL, EMPTY, PENDING };

// Dataflow matching-store cell. A non-FULL cell remembers the threads whose
// instruction suspended on it.
struct RegisterCell {
  CellState state = CellState::FULL;
  Word value = 0;
  std::vector<SlotId> waiters;
  // Opcode of the outstanding producer while PENDING.
  Opcode producer = Opcode::HALT;
  // Family operand of a pending SYNC or family GETSH.
  Word producer_arg = 0;
};

enum class ThreadState : std::uint8_t { ACTIVE, WAITING, SUSPENDED, KILLED };

struct ThreadContext {
  SlotId slot = 0;
  FamilyId family = 0;
  std::int64_t ordinal = 0;
  std::int64_t logical_index = 0;
  int pc = 0;
  // 32 architectural registers plus the incoming shared channel cell.
  std::array<RegisterCell, kNumRegisters + 1> cells{};
  ThreadState state = ThreadState::KILLED;
  // Control transfer in flight; fetch resumes when it resolves.
  bool fetch_blocked = false;
  // A hinted instruction is in flight and has not passed READ yet.
  bool hint_wait = false;
  // HALT committed; waiting for outstanding completions.
  bool halting = false;
  int pending = 0;
  int max_pending = 0;
  std::optional<RegIndex> suspended_on;
};

enum Stage : int { FETCH = 0, DECODE, READ, EXECUTE, MEMORY, WRITEBACK };
inline constexpr int kStages = 6;

struct InFlight {
  SlotId slot = 0;
  int pc = 0;
  const Instruction* instr = nullptr;
  std::array<Word, 4> operands{};
  Word result = 0;
};

struct Pipeline {
  std::array<std::optional<InFlight>, kStages> stages;

  // Removes the thread's entries from FETCH and DECODE (the stages younger
  // than READ); returns how many were removed.
  int flush_younger(SlotId slot);
  bool empty() const;
};

struct CoreConfig {
  int thread_slots = 64;
  bool hints = true;
};

struct CoreCounters {
  std::uint64_t commits = 0;
  std::uint64_t bubbles = 0;
  std::uint64_t flushes = 0;
  std::uint64_t switch_events = 0;
  std::uint64_t suspends = 0;
  std::uint64_t busy_cycles = 0;
  std::uint64_t fetches = 0;
};

struct CommitRecord {
  Cycle cycle = 0;
  CoreId core = 0;
  SlotId slot = 0;
  FamilyId family = 0;
  std::int64_t index = 0;
  int pc = 0;
  Opcode op = Opcode::HALT;
};

// What a core needs from the rest of the chip.
class CoreServices {
 public:
  virtual ~CoreServices() = default;
  virtual IcacheStatus icache_probe(CoreId core, int pc) = 0;
  virtual LoadResult load(CoreId core, Word addr, FamilyId epoch,
                          RegRef dst) = 0;
  virtual void store(CoreId core, Word addr, Word value, FamilyId epoch) = 0;
  virtual void allocate(RegRef reply, int size, int hint) = 0;
  virtual void create(const CreateRequest& req) = 0;
  virtual void sync(FamilyId family, RegRef target) = 0;
  virtual void release(AllocId alloc, CoreId issuer) = 0;
  virtual void putsh(FamilyId family, std::int64_t ordinal, Word value,
                     CoreId from) = 0;
  virtual void putsh_family(FamilyId family, Word value, CoreId from) = 0;
  virtual void getsh_final(FamilyId family, RegRef dst) = 0;
  virtual void thread_terminated(CoreId core, SlotId slot) = 0;
  virtual void committed(const CommitRecord& record) = 0;
};

// One D-RISC core: six-stage in-order single-issue pipeline over a pool of
// hardware thread contexts. Operand availability is tested at READ; an
// instruction whose operand is not FULL suspends its thread on that cell and
// the thread's younger instructions are flushed.
class Core {
 public:
  Core(CoreId id, const Program& program, CoreConfig config,
       CoreServices& services);

  CoreId id() const { return id_; }

  void step(Cycle now);

  // Completes a split-phase result; returns the threads woken.
  std::vector<SlotId> writeback(SlotId slot, RegIndex reg, Word value);

  bool has_free_slot() const;
  SlotId start_thread(const ThreadStart& start);

  // Schedule-queue arbitration for this cycle; exposed for tests.
  std::optional<SlotId> fetch_select();
  int flush_younger(SlotId slot);

  const ThreadContext& context(SlotId slot) const { return threads_[slot]; }
  ThreadContext& context_mut(SlotId slot) { return threads_[slot]; }
  const std::deque<SlotId>& schedule_queue() const { return queue_; }
  const Pipeline& pipeline() const { return pipeline_; }
  const CoreCounters& counters() const { return counters_; }
  int live_threads() const;
  int slots() const { return static_cast<int>(threads_.size()); }
  int max_pending() const { return max_pending_; }

 private:
  bool read_operands(InFlight& f);
  void suspend(InFlight& f, RegIndex cell);
  void execute(InFlight& f);
  void memory_stage(InFlight& f);
  void commit(const InFlight& f, Cycle now);
  void terminate(SlotId slot);
  void fetch(SlotId slot);
  void set_register(ThreadContext& ctx, RegIndex reg, Word value);
  void dequeue(SlotId slot);

  CoreId id_;
  const Program& program_;
  CoreConfig config_;
  CoreServices& services_;
  std::vector<ThreadContext> threads_;
  std::deque<SlotId> queue_;
  Pipeline pipeline_;
  CoreCounters counters_;
  std::optional<SlotId> last_hinted_;
  int max_pending_ = 0;
};

}  // namespace mgsim2
