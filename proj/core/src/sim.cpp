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

#include "mgsim2/sim.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace mgsim2 {

void ChipConfig::check() const {
  if (cores < 1) throw std::invalid_argument("cores must be >= 1");
  if (hop_latency < 1) throw std::invalid_argument("hop_latency must be >= 1");
  if (thread_slots < 1) throw std::invalid_argument("thread_slots must be >= 1");
  if (watchdog_cycles == 0) {
    throw std::invalid_argument("watchdog_cycles must be > 0");
  }
  if (starvation_threshold < 1) {
    throw std::invalid_argument("starvation_threshold must be >= 1");
  }
  cache.check();
}

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::COMPLETED: return "COMPLETED";
    case Outcome::DEADLOCK_STARVATION: return "DEADLOCK_STARVATION";
    case Outcome::DEADLOCK_DATAFLOW: return "DEADLOCK_DATAFLOW";
    case Outcome::WATCHDOG_TIMEOUT: return "WATCHDOG_TIMEOUT";
    case Outcome::FAULT: return "FAULT";
  }
  return "?";
}

std::string format_trace_line(const CommitRecord& r) {
  std::ostringstream os;
  os << r.cycle << ' ' << r.core << ' ' << r.slot << ' ' << r.family << ' '
     << r.index << ' ' << r.pc << ' ' << mnemonic(r.op);
  return os.str();
}

std::string format_trace(const std::vector<CommitRecord>& trace) {
  std::string out;
  for (const auto& r : trace) {
    out += format_trace_line(r);
    out += '\n';
  }
  return out;
}

std::string serialize(const RunResult& r) {
  std::ostringstream os;
  const auto& m = r.metrics;
  os << "outcome " << to_string(r.outcome) << '\n'
     << "diagnostic " << r.diagnostic << '\n'
     << "cycles " << m.cycles << '\n';
  for (std::size_t c = 0; c < m.per_core.size(); ++c) {
    const auto& k = m.per_core[c];
    os << "core " << c << ' ' << k.commits << ' ' << k.bubbles << ' '
       << k.flushes << ' ' << k.switch_events << ' ' << k.suspends << ' '
       << k.busy_cycles << '\n';
  }
  os << "chip " << m.propagation_messages << ' ' << m.control_messages << ' '
     << m.hop_traversals << ' ' << m.loads << ' ' << m.stores << ' '
     << m.d_misses << ' ' << m.i_misses << ' ' << m.allocations_denied << ' '
     << m.families << ' ' << m.max_pending_per_thread << '\n';
  for (const auto& [link, n] : r.hop_log) {
    os << "link " << link.first << '-' << link.second << ' ' << n << '\n';
  }
  if (r.final_memory) os << "memory " << image_hash(*r.final_memory) << '\n';
  os << format_trace(r.trace);
  return os.str();
}

bool has_wait_cycle(const WaitSnapshot& s) {
  const int n = static_cast<int>(s.threads.size());
  std::vector<int> color(n, 0);
  std::function<bool(int)> visit = [&](int v) {
    color[v] = 1;
    for (int w : s.threads[v].waits_on) {
      if (w < 0 || w >= n) continue;
      if (color[w] == 1) return true;
      if (color[w] == 0 && visit(w)) return true;
    }
    color[v] = 2;
    return false;
  };
  for (int v = 0; v < n; ++v) {
    if (color[v] == 0 && visit(v)) return true;
  }
  return false;
}

DeadlockKind detect_deadlock(const WaitSnapshot& s) {
  if (s.threads.empty() || s.transactions_in_flight) return DeadlockKind::NONE;
  bool any_starving = false;
  bool all_blocked = true;
  bool all_suspended = true;
  for (const auto& t : s.threads) {
    any_starving = any_starving || t.starving;
    all_blocked = all_blocked && (t.starving || t.suspended);
    all_suspended = all_suspended && t.suspended && !t.starving;
  }
  if (any_starving && all_blocked) return DeadlockKind::STARVATION;
  if (all_suspended) return DeadlockKind::DATAFLOW;
  return DeadlockKind::NONE;
}

Chip::Chip(ChipConfig config, const Program& program)
    : config_(config), program_(program) {
  config_.check();
  memory_ = std::make_unique<MemorySystem>(config_.cores, config_.memory_bytes,
                                           config_.cache, config_.coherency);
  memory_->initialize(program_.data);
  noc_ = std::make_unique<ControlNetwork>(
      Topology{config_.topology, config_.cores, config_.hop_latency});
  tmu_ = std::make_unique<ThreadManager>(
      config_.cores, *noc_, *memory_, [this](RegRef r, Word v) {
        cores_.at(r.core)->writeback(r.slot, r.reg, v);
      });
  for (CoreId c = 0; c < config_.cores; ++c) {
    cores_.push_back(std::make_unique<Core>(
        c, program_, CoreConfig{config_.thread_slots, config_.hints},
        static_cast<CoreServices&>(*this)));
  }
  root_ = tmu_->create_root(0, program_.root_entry(), 0);
}

Chip::~Chip() = default;

IcacheStatus Chip::icache_probe(CoreId core, int pc) {
  return memory_->icache_probe(core, pc, now_);
}

LoadResult Chip::load(CoreId core, Word addr, FamilyId epoch, RegRef dst) {
  return memory_->load(core, addr, epoch, dst, now_);
}

void Chip::store(CoreId core, Word addr, Word value, FamilyId epoch) {
  memory_->store(core, addr, value, epoch);
}

void Chip::allocate(RegRef reply, int size, int hint) {
  tmu_->request_allocate(reply, size, hint, now_);
}

void Chip::create(const CreateRequest& req) { tmu_->create_family(req, now_); }

void Chip::sync(FamilyId family, RegRef target) {
  tmu_->sync(family, target, now_);
}

void Chip::release(AllocId alloc, CoreId issuer) {
  tmu_->release(alloc, issuer, now_);
}

void Chip::putsh(FamilyId family, std::int64_t ordinal, Word value,
                 CoreId from) {
  tmu_->putsh(family, ordinal, value, from, now_);
}

void Chip::putsh_family(FamilyId family, Word value, CoreId from) {
  tmu_->putsh_family(family, value, from, now_);
}

void Chip::getsh_final(FamilyId family, RegRef dst) {
  tmu_->getsh_final(family, dst, now_);
}

void Chip::thread_terminated(CoreId core, SlotId slot) {
  tmu_->thread_terminated(core, slot, now_);
}

void Chip::committed(const CommitRecord& record) {
  if (config_.trace) trace_.push_back(record);
  switch (record.op) {
    case Opcode::ST:
    case Opcode::CREATE:
    case Opcode::SYNC:
    case Opcode::RELEASE:
    case Opcode::PUTSH:
    case Opcode::HALT:
      tmu_->note_progress(record.core, record.slot);
      break;
    default:
      break;
  }
}

void Chip::step() {
  // Fixed intra-cycle order: thread starts, cores by id, memory fills, TMU
  // completions, control network deliveries (dst id, then FIFO).
  for (auto& core : cores_) {
    const CoreId c = core->id();
    while (tmu_->has_pending_start(c) && core->has_free_slot()) {
      ThreadStart s = tmu_->pop_start(c);
      const SlotId slot = core->start_thread(s);
      tmu_->thread_started(c, slot, s);
    }
  }
  for (auto& core : cores_) core->step(now_);
  for (const Fill& f : memory_->tick(now_)) {
    cores_[f.dst.core]->writeback(f.dst.slot, f.dst.reg, f.value);
  }
  tmu_->tick(now_);
  for (const auto& msg : noc_->step(now_)) tmu_->deliver(msg, now_);
  ++now_;
}

bool Chip::completed() const {
  return tmu_->family(root_).complete && tmu_->all_complete() &&
         noc_->in_flight() == 0 && !memory_->busy() && !tmu_->busy();
}

bool Chip::quiescent() const {
  if (memory_->busy() || noc_->in_flight() != 0 || tmu_->busy()) return false;
  for (const auto& core : cores_) {
    if (!core->pipeline().empty()) return false;
    for (SlotId s : core->schedule_queue()) {
      if (!core->context(s).fetch_blocked) return false;
    }
    if (tmu_->has_pending_start(core->id()) && core->has_free_slot()) {
      return false;
    }
  }
  return true;
}

bool Chip::starvation_possible() const {
  if (memory_->busy() || tmu_->busy() ||
      !noc_->in_flight_only(MessageKind::ALLOCATE_REQ,
                            MessageKind::ALLOCATE_RSP))
    return false;
  for (const auto& core : cores_) {
    for (SlotId s = 0; s < core->slots(); ++s) {
      if (core->context(s).state != ThreadState::KILLED &&
          tmu_->consecutive_denials(core->id(), s) >=
              config_.starvation_threshold)
        return true;
    }
  }
  return false;
}

WaitSnapshot Chip::wait_snapshot() const {
  WaitSnapshot snap;
  snap.transactions_in_flight =
      memory_->busy() || tmu_->busy() ||
      !noc_->in_flight_only(MessageKind::ALLOCATE_REQ,
                            MessageKind::ALLOCATE_RSP);
  // Dense (core, slot) -> node index; -1 for free slots.
  const int slots = config_.thread_slots;
  std::vector<int> index(cores_.size() * static_cast<std::size_t>(slots), -1);
  auto node_at = [&](CoreId c, SlotId s) -> int& {
    return index[static_cast<std::size_t>(c) * slots + s];
  };
  auto node_of = [&](const std::pair<CoreId, SlotId>& cs) {
    const int n = node_at(cs.first, cs.second);
    if (n < 0) throw std::logic_error("wait edge to a free slot");
    return n;
  };
  std::vector<std::pair<CoreId, SlotId>> nodes;
  for (const auto& core : cores_) {
    for (SlotId s = 0; s < core->slots(); ++s) {
      if (core->context(s).state != ThreadState::KILLED) {
        node_at(core->id(), s) = static_cast<int>(nodes.size());
        nodes.emplace_back(core->id(), s);
      }
    }
  }
  snap.threads.resize(nodes.size());

  // Edges to a producer thread; an unstarted producer waits on every live
  // thread of its core for a slot.
  auto producer_edges = [&](FamilyId fid, std::int64_t ordinal,
                            WaitNode& node) {
    const Family& f = tmu_->family(fid);
    if (ordinal < 0 || ordinal >= f.n) {
      node.dangling = true;
      return;
    }
    if (auto pl = f.placement.find(ordinal); pl != f.placement.end()) {
      node.waits_on.push_back(node_of(pl->second));
    } else if (f.status[ordinal] == 0) {
      const CoreId c = f.core_of(ordinal);
      for (SlotId s = 0; s < cores_[c]->slots(); ++s) {
        if (const int n = node_at(c, s); n >= 0) node.waits_on.push_back(n);
      }
    } else {
      node.dangling = true;
    }
  };

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto [c, s] = nodes[i];
    const ThreadContext& ctx = cores_[c]->context(s);
    WaitNode& node = snap.threads[i];
    node.suspended = ctx.state == ThreadState::SUSPENDED ||
                     ctx.state == ThreadState::WAITING;
    node.starving =
        tmu_->consecutive_denials(c, s) >= config_.starvation_threshold;
    if (!node.suspended) continue;
    std::vector<RegIndex> cells;
    if (ctx.suspended_on) cells.push_back(*ctx.suspended_on);
    if (ctx.state == ThreadState::WAITING) {
      for (RegIndex r = 1; r < kNumRegisters; ++r) {
        if (ctx.cells[r].state == CellState::PENDING) cells.push_back(r);
      }
    }
    for (RegIndex r : cells) {
      const RegisterCell& cell = ctx.cells[r];
      if (cell.state == CellState::FULL) continue;
      if (r == kSharedInCell) {
        const Family& f = tmu_->family(ctx.family);
        if (ctx.ordinal > 0) {
          producer_edges(ctx.family, ctx.ordinal - 1, node);
        } else if (f.parent && !f.seed) {
          producer_edges(*f.parent, f.parent_ordinal, node);
        } else {
          node.dangling = true;
        }
        continue;
      }
      const auto fid = static_cast<FamilyId>(cell.producer_arg);
      if (cell.producer == Opcode::SYNC && tmu_->family_exists(fid)) {
        const Family& f = tmu_->family(fid);
        for (const auto& [ordinal, place] : f.placement) {
          node.waits_on.push_back(node_of(place));
        }
        for (std::int64_t k = 0; k < f.n; ++k) {
          if (f.status[k] == 0) producer_edges(fid, k, node);
        }
      } else if (cell.producer == Opcode::GETSH && tmu_->family_exists(fid)) {
        const Family& f = tmu_->family(fid);
        producer_edges(fid, f.n - 1, node);
      } else {
        node.dangling = true;
      }
    }
  }
  return snap;
}

Metrics Chip::collect_metrics() const {
  Metrics m;
  m.cycles = now_;
  for (const auto& core : cores_) {
    const auto& k = core->counters();
    CoreMetrics cm;
    cm.commits = k.commits;
    cm.bubbles = k.bubbles;
    cm.flushes = k.flushes;
    cm.switch_events = k.switch_events;
    cm.suspends = k.suspends;
    cm.busy_cycles = k.busy_cycles;
    cm.utilization =
        now_ == 0 ? 0.0
                  : static_cast<double>(k.commits) / static_cast<double>(now_);
    m.commits += cm.commits;
    m.bubbles += cm.bubbles;
    m.flushes += cm.flushes;
    m.switch_events += cm.switch_events;
    m.utilization += cm.utilization;
    m.max_pending_per_thread =
        std::max(m.max_pending_per_thread, core->max_pending());
    m.per_core.push_back(cm);
  }
  m.utilization /= static_cast<double>(cores_.size());
  const auto& ms = memory_->stats();
  m.propagation_messages = ms.propagation_messages;
  m.loads = ms.loads;
  m.stores = ms.stores;
  m.d_misses = ms.d_misses;
  m.i_misses = ms.i_misses;
  m.control_messages = noc_->injected();
  m.hop_traversals = noc_->total_hops();
  m.allocations_denied = tmu_->allocations_denied();
  m.families = tmu_->families().size();
  return m;
}

RunResult Chip::run() {
  RunResult result;
  try {
    auto diags = validate(program_);
    if (!diags.empty()) {
      std::string msg = "invalid program:";
      for (const auto& d : diags) msg += " " + d + ";";
      throw SimFault(msg);
    }
    while (true) {
      step();
      if (completed()) {
        result.outcome = Outcome::COMPLETED;
        break;
      }
      if (now_ >= config_.watchdog_cycles) {
        result.outcome = Outcome::WATCHDOG_TIMEOUT;
        result.diagnostic = "no completion after " +
                            std::to_string(config_.watchdog_cycles) +
                            " cycles";
        break;
      }
      // Starvation shows as retry loops that keep the pipeline busy, so it
      // is polled; dataflow deadlock only once nothing moves.
      const bool quiet = quiescent();
      if (quiet || (now_ % 16 == 0 && starvation_possible())) {
        const DeadlockKind kind = detect_deadlock(wait_snapshot());
        if (kind == DeadlockKind::STARVATION) {
          result.outcome = Outcome::DEADLOCK_STARVATION;
          result.diagnostic = "all progress blocked on denied allocations";
          break;
        }
        if (kind == DeadlockKind::DATAFLOW && quiet) {
          result.outcome = Outcome::DEADLOCK_DATAFLOW;
          result.diagnostic = has_wait_cycle(wait_snapshot())
                                  ? "cycle in the waits-for graph"
                                  : "wait on a value that can no longer be "
                                    "produced";
          break;
        }
      }
      if (quiet && !completed()) {
        result.outcome = Outcome::DEADLOCK_DATAFLOW;
        result.diagnostic = "no component can make progress";
        break;
      }
    }
  } catch (const SimFault& fault) {
    result.outcome = Outcome::FAULT;
    result.diagnostic = fault.what();
  }
  result.metrics = collect_metrics();
  if (result.outcome == Outcome::COMPLETED) {
    result.final_memory = memory_->image();
  }
  result.trace = std::move(trace_);
  result.hop_log = noc_->hop_log();
  for (const auto& [id, f] : tmu_->families()) {
    result.family_traffic.push_back(
        {id, f.owner, f.span_first, f.span_size, noc_->hop_log(id)});
  }
  return result;
}

RunResult run(const ChipConfig& config, const Program& program) {
  Chip chip(config, program);
  return chip.run();
}

}  // namespace mgsim2
