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
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "mgsim2/memory.hpp"
#include "mgsim2/noc.hpp"
#include "mgsim2/types.hpp"

namespace mgsim2 {

// Even N/P split: the first N mod P cores get ceil(N/P), the rest floor(N/P).
std::vector<std::int64_t> distribute(std::int64_t n, int p);

// Number of indices start, start+step, ... strictly before limit.
std::int64_t family_size(std::int64_t start, std::int64_t limit,
                         std::int64_t step);

struct Allocation {
  AllocId id = 0;
  CoreId first = 0;
  int size = 0;
  CoreId owner = 0;

  bool contains(CoreId core) const {
    return core >= first && core < first + size;
  }
};

// Free pool of contiguous core spans. Spans held by live allocations are
// disjoint; a request that cannot be met is denied immediately.
class AllocationPool {
 public:
  explicit AllocationPool(int cores);

  // hint < 0 requests LOCAL placement (a span containing the owner, lowest
  // start first); otherwise REMOTE placement starting exactly at `hint`.
  std::optional<Allocation> allocate(CoreId owner, int size, int hint);
  void release(AllocId id);
  bool live(AllocId id) const { return live_.count(id) != 0; }
  const Allocation& get(AllocId id) const;
  bool core_free(CoreId core) const { return holder_[core] == 0; }
  int cores() const { return static_cast<int>(holder_.size()); }
  std::vector<Allocation> live_allocations() const;

 private:
  bool span_free(CoreId first, int size) const;

  std::vector<AllocId> holder_;
  std::map<AllocId, Allocation> live_;
  AllocId next_id_ = 1;
};

struct Family {
  FamilyId id = 0;
  std::optional<FamilyId> parent;
  std::int64_t parent_ordinal = 0;
  std::int64_t start = 0;
  std::int64_t limit = 0;
  std::int64_t step = 1;
  std::int64_t n = 0;
  int body = 0;
  AllocId alloc = 0;  // 0 = created on the owner core without an allocation
  CoreId owner = 0;
  CoreId span_first = 0;
  int span_size = 1;
  std::vector<std::int64_t> member_counts;
  std::vector<std::int64_t> member_offsets;
  std::vector<std::int64_t> member_remaining;
  std::int64_t outstanding = 0;
  std::optional<Word> seed;
  std::optional<Word> final_value;
  std::vector<RegRef> final_waiters;
  std::optional<RegRef> sync_target;
  bool sync_requested = false;
  bool complete = false;
  Cycle created_at = 0;
  Cycle completed_at = 0;
  // Per-ordinal lifecycle: 0 = not started, 1 = live, 2 = terminated.
  std::vector<std::uint8_t> status;
  std::map<std::int64_t, Word> mailbox;
  // Live ordinals -> (core, slot).
  std::map<std::int64_t, std::pair<CoreId, SlotId>> placement;

  std::int64_t logical_index(std::int64_t ordinal) const {
    return start + ordinal * step;
  }
  CoreId core_of(std::int64_t ordinal) const;
};

struct CreateRequest {
  CoreId core = 0;
  FamilyId creator_family = 0;
  std::int64_t creator_ordinal = 0;
  AllocId alloc = 0;
  std::int64_t start = 0;
  std::int64_t limit = 0;
  std::int64_t step = 1;
  int body = 0;
  std::optional<Word> seed;
  RegRef reply;
};

struct ThreadStart {
  FamilyId family = 0;
  std::int64_t ordinal = 0;
  std::int64_t logical_index = 0;
  int body = 0;
  std::optional<Word> shared_in;
};

struct ThreadPlace {
  FamilyId family = 0;
  std::int64_t ordinal = 0;
};

// Chip-wide thread management: one logical TMU per core sharing the family
// table and the allocation pool. Cross-core effects travel over the control
// network; register results are delivered through `write`.
class ThreadManager {
 public:
  using WriteFn = std::function<void(RegRef, Word)>;

  ThreadManager(int cores, ControlNetwork& noc, MemorySystem& memory,
                WriteFn write, int local_latency = 1);

  // Root family: one thread, ordinal 0, on `core`.
  FamilyId create_root(CoreId core, int body, Cycle now);

  void request_allocate(RegRef reply, int size, int hint, Cycle now);
  FamilyId create_family(const CreateRequest& req, Cycle now);
  void sync(FamilyId family, RegRef target, Cycle now);
  void release(AllocId alloc, CoreId issuer, Cycle now);
  void putsh(FamilyId family, std::int64_t ordinal, Word value, CoreId from,
             Cycle now);
  void putsh_family(FamilyId family, Word value, CoreId from, Cycle now);
  void getsh_final(FamilyId family, RegRef dst, Cycle now);
  void thread_terminated(CoreId core, SlotId slot, Cycle now);

  void deliver(const ControlMessage& msg, Cycle now);
  void tick(Cycle now);

  bool has_pending_start(CoreId core) const {
    return !start_queue_[core].empty();
  }
  ThreadStart pop_start(CoreId core);
  void thread_started(CoreId core, SlotId slot, const ThreadStart& start);

  std::optional<ThreadPlace> thread_at(CoreId core, SlotId slot) const;
  std::optional<RegRef> locate(FamilyId family, std::int64_t ordinal) const;
  const Family& family(FamilyId id) const;
  bool family_exists(FamilyId id) const { return families_.count(id) != 0; }
  const std::map<FamilyId, Family>& families() const { return families_; }
  const AllocationPool& pool() const { return pool_; }
  bool all_complete() const;
  bool busy() const { return !local_.empty(); }

  // Starvation bookkeeping: denied allocations since the thread last made
  // progress.
  int consecutive_denials(CoreId core, SlotId slot) const;
  void note_progress(CoreId core, SlotId slot);

  std::uint64_t allocations_denied() const { return denied_; }
  std::uint64_t allocations_granted() const { return granted_; }

 private:
  struct LocalCompletion {
    Cycle ready;
    std::uint64_t seq;
    RegRef dst;
    Word value;
  };

  Family& family_mut(FamilyId id);
  void send(MessageKind kind, CoreId src, CoreId dst, Payload payload,
            FamilyId tag, Cycle now);
  void complete_family(Family& f, Cycle now);
  void route_shared(Family& f, std::int64_t ordinal, Word value, CoreId from,
                    Cycle now);
  void complete_locally(RegRef dst, Word value, Cycle now);

  int cores_;
  ControlNetwork& noc_;
  MemorySystem& memory_;
  WriteFn write_;
  int local_latency_;
  AllocationPool pool_;
  std::map<FamilyId, Family> families_;
  std::map<AllocId, std::vector<FamilyId>> alloc_families_;
  std::vector<std::deque<std::pair<FamilyId, std::int64_t>>> start_queue_;
  std::vector<std::map<SlotId, ThreadPlace>> placed_;
  std::map<std::pair<CoreId, SlotId>, int> denials_;
  std::vector<LocalCompletion> local_;
  FamilyId next_family_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t denied_ = 0;
  std::uint64_t granted_ = 0;
};

}  // namespace mgsim2
