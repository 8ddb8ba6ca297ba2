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

#include "mgsim2/oracle.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>

#include "mgsim2/tmu.hpp"

namespace mgsim2 {

namespace {

struct OracleFamily {
  std::int64_t n = 0;
  std::optional<Word> seed;
  std::optional<Word> final_value;
};

class Interpreter {
 public:
  Interpreter(const Program& program, std::size_t memory_bytes,
              std::uint64_t max_steps)
      : program_(program), max_steps_(max_steps) {
    result_.memory.assign(memory_bytes / 4, 0);
    for (const auto& d : program.data) {
      check(d.addr);
      result_.memory[d.addr / 4] = d.value;
    }
  }

  OracleResult run() {
    families_[kRootFamily] = OracleFamily{1, std::nullopt, std::nullopt};
    run_thread(kRootFamily, 0, program_.root_entry(), std::nullopt);
    return std::move(result_);
  }

 private:
  void check(Word addr) const {
    if (addr % 4 != 0 || addr / 4 >= result_.memory.size()) {
      throw OracleError("memory fault at address " + std::to_string(addr));
    }
  }

  // Returns the value the thread sent on its outgoing channel, if any.
  std::optional<Word> run_thread(FamilyId fid, std::int64_t index, int pc,
                                 std::optional<Word> shared_in) {
    std::array<Word, kNumRegisters> regs{};
    std::optional<Word> shared_out;
    const std::size_t trace_slot = result_.traces.size();
    result_.traces.push_back({fid, index, {}});
    const int n = static_cast<int>(program_.instructions.size());
    auto set = [&](RegIndex r, Word v) {
      if (r != 0) regs[r] = v;
    };
    while (true) {
      if (pc < 0 || pc >= n) {
        throw OracleError("pc " + std::to_string(pc) + " out of range");
      }
      if (++steps_ > max_steps_) throw OracleError("step budget exhausted");
      const Instruction& in = program_.instructions[pc];
      result_.traces[trace_slot].pcs.push_back(pc);
      const Word a = regs[in.src[0]];
      const Word b = regs[in.src[1]];
      int next = pc + 1;
      switch (in.op) {
        case Opcode::ADD: set(in.dst, a + b); break;
        case Opcode::SUB: set(in.dst, a - b); break;
        case Opcode::MUL: set(in.dst, a * b); break;
        case Opcode::ADDI: set(in.dst, a + static_cast<Word>(in.imm)); break;
        case Opcode::LD: {
          const Word addr = a + static_cast<Word>(in.imm);
          check(addr);
          ++result_.loads;
          set(in.dst, result_.memory[addr / 4]);
          break;
        }
        case Opcode::ST: {
          const Word addr = b + static_cast<Word>(in.imm);
          check(addr);
          ++result_.stores;
          result_.memory[addr / 4] = a;
          break;
        }
        case Opcode::BEQ:
          if (a == b) next = in.target;
          break;
        case Opcode::BNE:
          if (a != b) next = in.target;
          break;
        case Opcode::JMP:
          next = in.target;
          break;
        case Opcode::HALT:
          return shared_out;
        case Opcode::ALLOCATE:
          set(in.dst, static_cast<Word>(next_alloc_++));
          break;
        case Opcode::CREATE: {
          if (in.target < 0) {
            throw OracleError("create of unknown body '" + in.body + "'");
          }
          std::optional<Word> seed;
          if (in.aux >= 0) seed = regs[in.aux];
          const FamilyId child = create(
              static_cast<std::int32_t>(regs[in.src[1]]),
              static_cast<std::int32_t>(regs[in.src[2]]), in.imm, in.target,
              seed);
          set(in.dst, static_cast<Word>(child));
          break;
        }
        case Opcode::SYNC:
          family(static_cast<FamilyId>(a));
          set(in.dst, 1);
          break;
        case Opcode::RELEASE:
          break;
        case Opcode::GETIDX:
          set(in.dst, static_cast<Word>(index));
          break;
        case Opcode::PUTSH:
          if (in.aux == 1) {
            auto& f = family(static_cast<FamilyId>(b));
            if (f.seed) throw OracleError("shared channel seeded twice");
            f.seed = a;
            if (f.n == 0) f.final_value = a;
          } else {
            if (shared_out) throw OracleError("shared channel written twice");
            shared_out = a;
          }
          break;
        case Opcode::GETSH:
          if (in.aux == 1) {
            auto& f = family(static_cast<FamilyId>(a));
            if (!f.final_value) {
              throw OracleError("family shared output read before written");
            }
            set(in.dst, *f.final_value);
          } else {
            if (!shared_in) {
              throw OracleError(
                  "shared channel read before its producer ran");
            }
            set(in.dst, *shared_in);
          }
          break;
      }
      pc = next;
    }
  }

  OracleFamily& family(FamilyId id) {
    auto it = families_.find(id);
    if (it == families_.end()) {
      throw OracleError("unknown family " + std::to_string(id));
    }
    return it->second;
  }

  FamilyId create(std::int64_t start, std::int64_t limit, std::int64_t step,
                  int body, std::optional<Word> seed) {
    const FamilyId id = next_family_++;
    const std::int64_t n = family_size(start, limit, step);
    families_[id] = OracleFamily{n, seed, std::nullopt};
    std::optional<Word> channel = seed;
    for (std::int64_t k = 0; k < n; ++k) {
      const bool unseeded_first = k == 0 && !seed;
      auto out = run_thread(id, start + k * step, body,
                            unseeded_first ? std::nullopt : channel);
      channel = out;
    }
    auto& f = families_[id];
    f.final_value = channel;
    return id;
  }

  const Program& program_;
  std::uint64_t max_steps_;
  std::uint64_t steps_ = 0;
  OracleResult result_;
  std::map<FamilyId, OracleFamily> families_;
  FamilyId next_family_ = 1;
  AllocId next_alloc_ = 1;
};

}  // namespace

OracleResult sequential_oracle(const Program& program,
                               std::size_t memory_bytes,
                               std::uint64_t max_steps) {
  return Interpreter(program, memory_bytes, max_steps).run();
}

}  // namespace mgsim2
