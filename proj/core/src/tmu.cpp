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

#include "mgsim2/tmu.hpp"

#include <algorithm>
#include <stdexcept>

namespace mgsim2 {

std::vector<std::int64_t> distribute(std::int64_t n, int p) {
  if (n < 0 || p < 1) throw std::invalid_argument("distribute: N >= 0, P >= 1");
  std::vector<std::int64_t> counts(p, n / p);
  for (std::int64_t i = 0; i < n % p; ++i) ++counts[i];
  return counts;
}

std::int64_t family_size(std::int64_t start, std::int64_t limit,
                         std::int64_t step) {
  if (step == 0) throw SimFault("family step must be nonzero");
  if (step > 0) {
    return limit <= start ? 0 : (limit - start + step - 1) / step;
  }
  return limit >= start ? 0 : (start - limit + (-step) - 1) / (-step);
}

AllocationPool::AllocationPool(int cores) : holder_(cores, 0) {}

bool AllocationPool::span_free(CoreId first, int size) const {
  if (first < 0 || size < 1 || first + size > cores()) return false;
  for (CoreId c = first; c < first + size; ++c) {
    if (holder_[c] != 0) return false;
  }
  return true;
}

std::optional<Allocation> AllocationPool::allocate(CoreId owner, int size,
                                                   int hint) {
  if (size < 1 || size > cores() || owner < 0 || owner >= cores()) {
    return std::nullopt;
  }
  std::optional<CoreId> first;
  if (hint < 0) {
    for (CoreId s = std::max(0, owner - size + 1);
         s <= std::min(owner, cores() - size); ++s) {
      if (span_free(s, size)) {
        first = s;
        break;
      }
    }
  } else if (span_free(hint, size)) {
    first = hint;
  }
  if (!first) return std::nullopt;
  Allocation a{next_id_++, *first, size, owner};
  for (CoreId c = a.first; c < a.first + a.size; ++c) holder_[c] = a.id;
  live_.emplace(a.id, a);
  return a;
}

void AllocationPool::release(AllocId id) {
  auto it = live_.find(id);
  if (it == live_.end()) {
    throw SimFault("release of unknown or released allocation " +
                   std::to_string(id));
  }
  for (CoreId c = it->second.first; c < it->second.first + it->second.size;
       ++c) {
    holder_[c] = 0;
  }
  live_.erase(it);
}

const Allocation& AllocationPool::get(AllocId id) const {
  auto it = live_.find(id);
  if (it == live_.end()) {
    throw SimFault("allocation " + std::to_string(id) + " is not live");
  }
  return it->second;
}

std::vector<Allocation> AllocationPool::live_allocations() const {
  std::vector<Allocation> out;
  for (const auto& [id, a] : live_) out.push_back(a);
  return out;
}

CoreId Family::core_of(std::int64_t ordinal) const {
  for (int m = 0; m < span_size; ++m) {
    if (ordinal >= member_offsets[m] &&
        ordinal < member_offsets[m] + member_counts[m]) {
      return span_first + m;
    }
  }
  return owner;
}

ThreadManager::ThreadManager(int cores, ControlNetwork& noc,
                             MemorySystem& memory, WriteFn write,
                             int local_latency)
    : cores_(cores),
      noc_(noc),
      memory_(memory),
      write_(std::move(write)),
      local_latency_(local_latency),
      pool_(cores),
      start_queue_(cores),
      placed_(cores) {}

Family& ThreadManager::family_mut(FamilyId id) {
  auto it = families_.find(id);
  if (it == families_.end()) {
    throw SimFault("unknown family " + std::to_string(id));
  }
  return it->second;
}

const Family& ThreadManager::family(FamilyId id) const {
  auto it = families_.find(id);
  if (it == families_.end()) {
    throw SimFault("unknown family " + std::to_string(id));
  }
  return it->second;
}

void ThreadManager::send(MessageKind kind, CoreId src, CoreId dst,
                         Payload payload, FamilyId tag, Cycle now) {
  ControlMessage msg;
  msg.kind = kind;
  msg.src = src;
  msg.dst = dst;
  msg.payload = std::move(payload);
  msg.injected_at = now;
  msg.tag = tag;
  noc_.send(std::move(msg));
}

void ThreadManager::complete_locally(RegRef dst, Word value, Cycle now) {
  local_.push_back(
      {now + static_cast<Cycle>(local_latency_), seq_++, dst, value});
}

FamilyId ThreadManager::create_root(CoreId core, int body, Cycle now) {
  Family f;
  f.id = next_family_++;
  f.start = 0;
  f.limit = 1;
  f.step = 1;
  f.n = 1;
  f.body = body;
  f.owner = core;
  f.span_first = core;
  f.span_size = 1;
  f.member_counts = {1};
  f.member_offsets = {0};
  f.member_remaining = {1};
  f.outstanding = 1;
  f.created_at = now;
  f.status.assign(1, 0);
  memory_.open_epoch(f.id);
  start_queue_[core].emplace_back(f.id, 0);
  families_.emplace(f.id, std::move(f));
  return f.id;
}

void ThreadManager::request_allocate(RegRef reply, int size, int hint,
                                     Cycle now) {
  if (hint >= cores_) hint = -2;  // cannot exist on this chip; always denied
  const CoreId target = hint >= 0 ? hint : reply.core;
  send(MessageKind::ALLOCATE_REQ, reply.core, target,
       AllocateReqPayload{reply, size, hint}, -1, now);
}

FamilyId ThreadManager::create_family(const CreateRequest& req, Cycle now) {
  Family f;
  f.id = next_family_++;
  f.parent = req.creator_family;
  f.parent_ordinal = req.creator_ordinal;
  f.start = req.start;
  f.limit = req.limit;
  f.step = req.step;
  f.n = family_size(req.start, req.limit, req.step);
  f.body = req.body;
  f.alloc = req.alloc;
  f.owner = req.core;
  f.seed = req.seed;
  f.created_at = now;
  if (req.alloc == 0) {
    f.span_first = req.core;
    f.span_size = 1;
  } else {
    if (!pool_.live(req.alloc)) {
      throw SimFault("create on released or unknown allocation " +
                     std::to_string(req.alloc));
    }
    const auto& a = pool_.get(req.alloc);
    f.span_first = a.first;
    f.span_size = a.size;
    alloc_families_[req.alloc].push_back(f.id);
  }
  f.member_counts = distribute(f.n, f.span_size);
  f.member_offsets.assign(f.span_size, 0);
  for (int m = 1; m < f.span_size; ++m) {
    f.member_offsets[m] = f.member_offsets[m - 1] + f.member_counts[m - 1];
  }
  f.member_remaining = f.member_counts;
  f.outstanding = f.n;
  f.status.assign(static_cast<std::size_t>(f.n), 0);

  // Stores of the creating family become visible to the sub-family.
  memory_.flush_epoch(req.creator_family);
  memory_.open_epoch(f.id);

  const FamilyId id = f.id;
  for (int m = 0; m < f.span_size; ++m) {
    if (f.member_counts[m] == 0) continue;
    send(MessageKind::CREATE, f.owner, f.span_first + m,
         CreatePayload{id, f.member_offsets[m], f.member_counts[m]}, id, now);
  }
  auto& stored = families_.emplace(id, std::move(f)).first->second;
  if (stored.n == 0) {
    stored.final_value = stored.seed;
    complete_family(stored, now);
  }
  complete_locally(req.reply, static_cast<Word>(id), now);
  return id;
}

void ThreadManager::complete_family(Family& f, Cycle now) {
  // Publication strictly precedes the sync write.
  memory_.flush_epoch(f.id);
  memory_.close_epoch(f.id);
  f.complete = true;
  f.completed_at = now;
  if (f.sync_target) {
    send(MessageKind::SYNC_DONE, f.owner, f.sync_target->core,
         SyncDonePayload{*f.sync_target}, f.id, now);
  }
}

void ThreadManager::sync(FamilyId id, RegRef target, Cycle now) {
  auto& f = family_mut(id);
  if (f.sync_requested) {
    throw SimFault("family " + std::to_string(id) + " synchronized twice");
  }
  f.sync_requested = true;
  f.sync_target = target;
  if (f.complete) {
    send(MessageKind::SYNC_DONE, f.owner, target.core, SyncDonePayload{target},
         f.id, now);
  }
}

void ThreadManager::release(AllocId alloc, CoreId issuer, Cycle now) {
  if (!pool_.live(alloc)) {
    throw SimFault("release of unknown or released allocation " +
                   std::to_string(alloc));
  }
  for (FamilyId fid : alloc_families_[alloc]) {
    if (!families_.at(fid).complete) {
      throw SimFault("release of allocation " + std::to_string(alloc) +
                     " with live family " + std::to_string(fid));
    }
  }
  const Allocation a = pool_.get(alloc);
  pool_.release(alloc);
  alloc_families_.erase(alloc);
  for (CoreId c = a.first; c < a.first + a.size; ++c) {
    send(MessageKind::RELEASE, issuer, c, ReleasePayload{alloc}, -1, now);
  }
}

void ThreadManager::route_shared(Family& f, std::int64_t ordinal, Word value,
                                 CoreId from, Cycle now) {
  const CoreId dst = ordinal >= f.n ? f.owner : f.core_of(ordinal);
  send(MessageKind::SHARED, from, dst, SharedPayload{f.id, ordinal, value},
       f.id, now);
}

void ThreadManager::putsh(FamilyId id, std::int64_t ordinal, Word value,
                          CoreId from, Cycle now) {
  auto& f = family_mut(id);
  route_shared(f, ordinal + 1, value, from, now);
}

void ThreadManager::putsh_family(FamilyId id, Word value, CoreId from,
                                 Cycle now) {
  auto& f = family_mut(id);
  if (f.seed) {
    throw SimFault("family " + std::to_string(id) +
                   " shared channel seeded twice");
  }
  f.seed = value;
  route_shared(f, 0, value, from, now);
}

void ThreadManager::getsh_final(FamilyId id, RegRef dst, Cycle now) {
  auto& f = family_mut(id);
  if (f.final_value) {
    complete_locally(dst, *f.final_value, now);
  } else {
    f.final_waiters.push_back(dst);
  }
}

void ThreadManager::thread_terminated(CoreId core, SlotId slot, Cycle now) {
  auto it = placed_[core].find(slot);
  if (it == placed_[core].end()) {
    throw SimFault("termination of a thread that is not live (core " +
                   std::to_string(core) + ", slot " + std::to_string(slot) +
                   ")");
  }
  const ThreadPlace place = it->second;
  placed_[core].erase(it);
  denials_.erase({core, slot});
  auto& f = family_mut(place.family);
  if (f.complete || f.status[place.ordinal] != 1) {
    throw SimFault("double termination in family " +
                   std::to_string(f.id));
  }
  f.status[place.ordinal] = 2;
  f.placement.erase(place.ordinal);
  const int member = core - f.span_first;
  if (--f.member_remaining[member] == 0) {
    send(MessageKind::TERMINATED, core, f.owner,
         TerminatedPayload{f.id, f.member_counts[member]}, f.id, now);
  }
}

void ThreadManager::deliver(const ControlMessage& msg, Cycle now) {
  switch (msg.kind) {
    case MessageKind::ALLOCATE_REQ: {
      const auto& p = std::get<AllocateReqPayload>(msg.payload);
      const int size = p.size == 0 ? cores_ : p.size;
      auto a = p.hint == -2 ? std::nullopt
                            : pool_.allocate(p.reply.core, size, p.hint);
      if (a) {
        ++granted_;
        denials_.erase({p.reply.core, p.reply.slot});
      } else {
        ++denied_;
        ++denials_[{p.reply.core, p.reply.slot}];
      }
      send(MessageKind::ALLOCATE_RSP, msg.dst, p.reply.core,
           AllocateRspPayload{p.reply, a ? a->id : 0}, -1, now);
      break;
    }
    case MessageKind::ALLOCATE_RSP: {
      const auto& p = std::get<AllocateRspPayload>(msg.payload);
      write_(p.reply, static_cast<Word>(p.alloc));
      break;
    }
    case MessageKind::CREATE: {
      const auto& p = std::get<CreatePayload>(msg.payload);
      for (std::int64_t k = 0; k < p.count; ++k) {
        start_queue_[msg.dst].emplace_back(p.family, p.first_ordinal + k);
      }
      break;
    }
    case MessageKind::TERMINATED: {
      const auto& p = std::get<TerminatedPayload>(msg.payload);
      auto& f = family_mut(p.family);
      f.outstanding -= p.count;
      if (f.outstanding < 0) {
        throw SimFault("family " + std::to_string(f.id) +
                       " terminated more threads than it has");
      }
      if (f.outstanding == 0) complete_family(f, now);
      break;
    }
    case MessageKind::SYNC_DONE: {
      const auto& p = std::get<SyncDonePayload>(msg.payload);
      write_(p.target, 1);
      break;
    }
    case MessageKind::RELEASE:
      break;
    case MessageKind::SHARED: {
      const auto& p = std::get<SharedPayload>(msg.payload);
      auto& f = family_mut(p.family);
      if (p.ordinal >= f.n) {
        if (f.final_value) {
          throw SimFault("family " + std::to_string(f.id) +
                         " shared output written twice");
        }
        f.final_value = p.value;
        for (const auto& w : f.final_waiters) write_(w, p.value);
        f.final_waiters.clear();
        break;
      }
      if (auto pl = f.placement.find(p.ordinal); pl != f.placement.end()) {
        write_({pl->second.first, pl->second.second, kSharedInCell}, p.value);
      } else if (f.status[p.ordinal] == 0) {
        if (f.mailbox.count(p.ordinal)) {
          throw SimFault("shared channel of family " + std::to_string(f.id) +
                         " written twice");
        }
        f.mailbox[p.ordinal] = p.value;
      }
      break;
    }
  }
}

void ThreadManager::tick(Cycle now) {
  std::vector<LocalCompletion> due;
  std::vector<LocalCompletion> keep;
  for (auto& c : local_) (c.ready <= now ? due : keep).push_back(c);
  local_ = std::move(keep);
  std::sort(due.begin(), due.end(), [](const auto& a, const auto& b) {
    return a.ready != b.ready ? a.ready < b.ready : a.seq < b.seq;
  });
  for (const auto& c : due) write_(c.dst, c.value);
}

ThreadStart ThreadManager::pop_start(CoreId core) {
  auto [fid, ordinal] = start_queue_[core].front();
  start_queue_[core].pop_front();
  auto& f = family_mut(fid);
  ThreadStart s{fid, ordinal, f.logical_index(ordinal), f.body, std::nullopt};
  if (ordinal == 0 && f.seed && !f.mailbox.count(0)) {
    s.shared_in = f.seed;
  }
  if (auto m = f.mailbox.find(ordinal); m != f.mailbox.end()) {
    s.shared_in = m->second;
    f.mailbox.erase(m);
  }
  return s;
}

void ThreadManager::thread_started(CoreId core, SlotId slot,
                                   const ThreadStart& start) {
  auto& f = family_mut(start.family);
  f.status[start.ordinal] = 1;
  f.placement[start.ordinal] = {core, slot};
  placed_[core][slot] = {start.family, start.ordinal};
}

std::optional<ThreadPlace> ThreadManager::thread_at(CoreId core,
                                                    SlotId slot) const {
  auto it = placed_[core].find(slot);
  if (it == placed_[core].end()) return std::nullopt;
  return it->second;
}

std::optional<RegRef> ThreadManager::locate(FamilyId id,
                                            std::int64_t ordinal) const {
  const auto& f = family(id);
  auto it = f.placement.find(ordinal);
  if (it == f.placement.end()) return std::nullopt;
  return RegRef{it->second.first, it->second.second, 0};
}

bool ThreadManager::all_complete() const {
  return std::all_of(families_.begin(), families_.end(),
                     [](const auto& kv) { return kv.second.complete; });
}

int ThreadManager::consecutive_denials(CoreId core, SlotId slot) const {
  auto it = denials_.find({core, slot});
  return it == denials_.end() ? 0 : it->second;
}

void ThreadManager::note_progress(CoreId core, SlotId slot) {
  denials_.erase({core, slot});
}

}  // namespace mgsim2
