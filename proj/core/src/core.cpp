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

#include "mgsim2/core.hpp"

#include <algorithm>

namespace mgsim2 {

int Pipeline::flush_younger(SlotId slot) {
  int removed = 0;
  for (int s : {FETCH, DECODE}) {
    if (stages[s] && stages[s]->slot == slot) {
      stages[s].reset();
      ++removed;
    }
  }
  return removed;
}

bool Pipeline::empty() const {
  return std::none_of(stages.begin(), stages.end(),
                      [](const auto& s) { return s.has_value(); });
}

Core::Core(CoreId id, const Program& program, CoreConfig config,
           CoreServices& services)
    : id_(id),
      program_(program),
      config_(config),
      services_(services),
      threads_(static_cast<std::size_t>(config.thread_slots)) {
  for (int s = 0; s < config.thread_slots; ++s) threads_[s].slot = s;
}

int Core::live_threads() const {
  return static_cast<int>(
      std::count_if(threads_.begin(), threads_.end(), [](const auto& t) {
        return t.state != ThreadState::KILLED;
      }));
}

bool Core::has_free_slot() const {
  return std::any_of(threads_.begin(), threads_.end(), [](const auto& t) {
    return t.state == ThreadState::KILLED;
  });
}

SlotId Core::start_thread(const ThreadStart& start) {
  auto it = std::find_if(threads_.begin(), threads_.end(), [](const auto& t) {
    return t.state == ThreadState::KILLED;
  });
  if (it == threads_.end()) throw SimFault("no free thread slot");
  ThreadContext& ctx = *it;
  const SlotId slot = ctx.slot;
  ctx = ThreadContext{};
  ctx.slot = slot;
  ctx.family = start.family;
  ctx.ordinal = start.ordinal;
  ctx.logical_index = start.logical_index;
  ctx.pc = start.body;
  ctx.state = ThreadState::ACTIVE;
  auto& shared = ctx.cells[kSharedInCell];
  if (start.shared_in) {
    shared.value = *start.shared_in;
  } else {
    shared.state = CellState::EMPTY;
  }
  queue_.push_back(slot);
  return slot;
}

void Core::dequeue(SlotId slot) {
  queue_.erase(std::remove(queue_.begin(), queue_.end(), slot), queue_.end());
}

void Core::set_register(ThreadContext& ctx, RegIndex reg, Word value) {
  if (reg == 0) return;
  ctx.cells[reg].value = value;
}

std::vector<SlotId> Core::writeback(SlotId slot, RegIndex reg, Word value) {
  ThreadContext& ctx = threads_.at(slot);
  if (ctx.state == ThreadState::KILLED) {
    throw SimFault("write to free thread slot " + std::to_string(slot) +
                   " on core " + std::to_string(id_));
  }
  if (reg == 0) return {};
  RegisterCell& cell = ctx.cells.at(reg);
  if (cell.state == CellState::FULL) {
    throw SimFault("double write to register cell " + std::to_string(reg) +
                   " (core " + std::to_string(id_) + ", slot " +
                   std::to_string(slot) + ")");
  }
  if (cell.state == CellState::PENDING) --ctx.pending;
  cell.state = CellState::FULL;
  cell.value = value;
  std::vector<SlotId> woken = std::move(cell.waiters);
  cell.waiters.clear();
  for (SlotId w : woken) {
    ThreadContext& t = threads_[w];
    if (t.state == ThreadState::SUSPENDED) {
      t.state = ThreadState::ACTIVE;
      t.suspended_on.reset();
      queue_.push_back(w);
    }
  }
  if (ctx.halting && ctx.pending == 0) terminate(slot);
  return woken;
}

void Core::terminate(SlotId slot) {
  ThreadContext& ctx = threads_[slot];
  dequeue(slot);
  ctx.state = ThreadState::KILLED;
  ctx.halting = false;
  services_.thread_terminated(id_, slot);
}

std::optional<SlotId> Core::fetch_select() {
  if (last_hinted_) {
    const SlotId h = *last_hinted_;
    last_hinted_.reset();
    auto it = std::find(queue_.begin(), queue_.end(), h);
    if (it != queue_.end()) {
      queue_.erase(it);
      queue_.push_back(h);
      if (queue_.size() > 1) ++counters_.switch_events;
    }
  }
  const bool alone = queue_.size() <= 1;
  for (SlotId s : queue_) {
    const ThreadContext& ctx = threads_[s];
    if (ctx.fetch_blocked) continue;
    // With a single schedulable thread the hint cannot be honoured and the
    // thread keeps fetching speculatively.
    if (ctx.hint_wait && !alone) continue;
    if (services_.icache_probe(id_, ctx.pc) == IcacheStatus::RESIDENT) {
      return s;
    }
  }
  return std::nullopt;
}

int Core::flush_younger(SlotId slot) {
  const int n = pipeline_.flush_younger(slot);
  counters_.flushes += static_cast<std::uint64_t>(n);
  return n;
}

void Core::fetch(SlotId slot) {
  ThreadContext& ctx = threads_[slot];
  if (ctx.pc < 0 ||
      ctx.pc >= static_cast<int>(program_.instructions.size())) {
    throw SimFault("pc " + std::to_string(ctx.pc) + " out of range on core " +
                   std::to_string(id_));
  }
  const Instruction& in = program_.instructions[ctx.pc];
  InFlight f;
  f.slot = slot;
  f.pc = ctx.pc;
  f.instr = &in;
  pipeline_.stages[FETCH] = f;
  ++counters_.fetches;
  if (is_control(in.op)) {
    ctx.fetch_blocked = true;
    if (in.op == Opcode::HALT) dequeue(slot);
  } else {
    ++ctx.pc;
  }
  if (config_.hints && in.switch_hint) {
    last_hinted_ = slot;
    ctx.hint_wait = true;
  }
}

void Core::suspend(InFlight& f, RegIndex cell) {
  ThreadContext& ctx = threads_[f.slot];
  ctx.cells[cell].waiters.push_back(f.slot);
  ctx.state = ThreadState::SUSPENDED;
  ctx.suspended_on = cell;
  ctx.pc = f.pc;
  ctx.fetch_blocked = false;
  ctx.hint_wait = false;
  dequeue(f.slot);
  if (last_hinted_ == f.slot) last_hinted_.reset();
  flush_younger(f.slot);
  ++counters_.suspends;
  ++counters_.bubbles;
}

bool Core::read_operands(InFlight& f) {
  ThreadContext& ctx = threads_[f.slot];
  const Instruction& in = *f.instr;
  const auto sources = source_registers(in);
  std::vector<RegIndex> needed(sources.begin(), sources.end());
  if (in.op == Opcode::GETSH && in.aux != 1) needed.push_back(kSharedInCell);
  const auto dst = destination_register(in);
  if (dst && *dst != 0) needed.push_back(*dst);  // no second outstanding write
  for (RegIndex r : needed) {
    if (r != 0 && ctx.cells[r].state != CellState::FULL) {
      suspend(f, r);
      return false;
    }
  }
  for (std::size_t i = 0; i < sources.size() && i < f.operands.size(); ++i) {
    f.operands[i] = sources[i] == 0 ? 0 : ctx.cells[sources[i]].value;
  }
  if (in.op == Opcode::GETSH && in.aux != 1) {
    f.result = ctx.cells[kSharedInCell].value;
  }
  const bool split_phase =
      in.op == Opcode::LD || in.op == Opcode::ALLOCATE ||
      in.op == Opcode::CREATE || in.op == Opcode::SYNC ||
      (in.op == Opcode::GETSH && in.aux == 1);
  if (split_phase && dst && *dst != 0) {
    RegisterCell& cell = ctx.cells[*dst];
    cell.state = CellState::PENDING;
    cell.producer = in.op;
    cell.producer_arg = f.operands[0];
    ++ctx.pending;
    ctx.max_pending = std::max(ctx.max_pending, ctx.pending);
    max_pending_ = std::max(max_pending_, ctx.pending);
  }
  if (in.switch_hint) ctx.hint_wait = false;
  return true;
}

void Core::execute(InFlight& f) {
  ThreadContext& ctx = threads_[f.slot];
  const Instruction& in = *f.instr;
  const auto& op = f.operands;
  switch (in.op) {
    case Opcode::ADD:
      set_register(ctx, in.dst, op[0] + op[1]);
      break;
    case Opcode::SUB:
      set_register(ctx, in.dst, op[0] - op[1]);
      break;
    case Opcode::MUL:
      set_register(ctx, in.dst, op[0] * op[1]);
      break;
    case Opcode::ADDI:
      set_register(ctx, in.dst, op[0] + static_cast<Word>(in.imm));
      break;
    case Opcode::GETIDX:
      set_register(ctx, in.dst, static_cast<Word>(ctx.logical_index));
      break;
    case Opcode::GETSH:
      if (in.aux != 1) set_register(ctx, in.dst, f.result);
      break;
    case Opcode::LD:
      f.result = op[0] + static_cast<Word>(in.imm);
      break;
    case Opcode::ST:
      f.result = op[1] + static_cast<Word>(in.imm);
      break;
    case Opcode::BEQ:
    case Opcode::BNE: {
      const bool taken = (op[0] == op[1]) == (in.op == Opcode::BEQ);
      ctx.pc = taken ? in.target : f.pc + 1;
      ctx.fetch_blocked = false;
      break;
    }
    case Opcode::JMP:
      ctx.pc = in.target;
      ctx.fetch_blocked = false;
      break;
    default:
      break;
  }
}

void Core::memory_stage(InFlight& f) {
  ThreadContext& ctx = threads_[f.slot];
  const Instruction& in = *f.instr;
  const RegRef dst{id_, f.slot, in.dst};
  const auto& op = f.operands;
  switch (in.op) {
    case Opcode::LD: {
      auto r = services_.load(id_, f.result, ctx.family, dst);
      if (r.hit && in.dst != 0) writeback(f.slot, in.dst, r.value);
      break;
    }
    case Opcode::ST:
      services_.store(id_, f.result, op[0], ctx.family);
      break;
    case Opcode::ALLOCATE:
      services_.allocate(dst, in.imm, in.aux);
      break;
    case Opcode::CREATE: {
      if (in.target < 0) {
        throw SimFault("create of unknown body '" + in.body + "'");
      }
      CreateRequest req;
      req.core = id_;
      req.creator_family = ctx.family;
      req.creator_ordinal = ctx.ordinal;
      req.alloc = static_cast<AllocId>(op[0]);
      req.start = static_cast<std::int32_t>(op[1]);
      req.limit = static_cast<std::int32_t>(op[2]);
      req.step = in.imm;
      req.body = in.target;
      if (in.aux >= 0) req.seed = op[3];
      req.reply = dst;
      services_.create(req);
      break;
    }
    case Opcode::SYNC:
      services_.sync(static_cast<FamilyId>(op[0]), dst);
      break;
    case Opcode::RELEASE:
      services_.release(static_cast<AllocId>(op[0]), id_);
      break;
    case Opcode::PUTSH:
      if (in.aux == 1) {
        services_.putsh_family(static_cast<FamilyId>(op[1]), op[0], id_);
      } else {
        services_.putsh(ctx.family, ctx.ordinal, op[0], id_);
      }
      break;
    case Opcode::GETSH:
      if (in.aux == 1) {
        services_.getsh_final(static_cast<FamilyId>(op[0]), dst);
      }
      break;
    default:
      break;
  }
}

void Core::commit(const InFlight& f, Cycle now) {
  ThreadContext& ctx = threads_[f.slot];
  ++counters_.commits;
  services_.committed({now, id_, f.slot, ctx.family, ctx.logical_index, f.pc,
                       f.instr->op});
  if (f.instr->op == Opcode::HALT) {
    ctx.halting = true;
    ctx.state = ThreadState::WAITING;
    if (ctx.pending == 0) terminate(f.slot);
  }
}

void Core::step(Cycle now) {
  auto& st = pipeline_.stages;
  if (!pipeline_.empty()) ++counters_.busy_cycles;

  if (st[WRITEBACK]) {
    InFlight f = *st[WRITEBACK];
    st[WRITEBACK].reset();
    commit(f, now);
  }
  if (st[MEMORY]) {
    memory_stage(*st[MEMORY]);
    st[WRITEBACK] = std::move(st[MEMORY]);
    st[MEMORY].reset();
  }
  if (st[EXECUTE]) {
    execute(*st[EXECUTE]);
    st[MEMORY] = std::move(st[EXECUTE]);
    st[EXECUTE].reset();
  }
  if (st[READ]) {
    InFlight f = *st[READ];
    st[READ].reset();
    if (read_operands(f)) st[EXECUTE] = f;
  }
  if (st[DECODE]) {
    st[READ] = std::move(st[DECODE]);
    st[DECODE].reset();
  }
  if (st[FETCH]) {
    st[DECODE] = std::move(st[FETCH]);
    st[FETCH].reset();
  }
  if (auto slot = fetch_select()) {
    fetch(*slot);
  } else if (live_threads() > 0) {
    ++counters_.bubbles;
  }
}

}  // namespace mgsim2
