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
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mgsim2/types.hpp"

namespace mgsim2 {

enum class Opcode : std::uint8_t {
  ADD,
  SUB,
  MUL,
  ADDI,
  LD,
  ST,
  BEQ,
  BNE,
  JMP,
  HALT,
  ALLOCATE,
  CREATE,
  SYNC,
  RELEASE,
  GETIDX,
  PUTSH,
  GETSH,
};

inline constexpr int kNumOpcodes = 17;

// Operand layout per opcode:
//   add/sub/mul rd, rs0, rs1        dst, src[0], src[1]
//   addi rd, rs0, imm               dst, src[0], imm
//   ld rd, imm(rs0)                 dst, src[0], imm
//   st rs0, imm(rs1)                src[0] = value, src[1] = base, imm
//   beq/bne rs0, rs1, label         src[0], src[1], target
//   jmp label                       target
//   allocate rd, size[, @core]      dst, imm = size (0 = whole chip), aux = placement hint or -1
//   create rd, ra, rs, rl, step, body[, rseed]
//                                   dst, src[0..2], imm = step, target = body, aux = seed reg or -1
//   sync rd, rf                     dst, src[0]
//   release ra                      src[0]
//   getidx rd                       dst
//   putsh rs0[, rf]                 src[0], src[1] = family when aux == 1
//   getsh rd[, rf]                  dst, src[0] = family when aux == 1
struct Instruction {
  Opcode op = Opcode::HALT;
  RegIndex dst = 0;
  std::array<RegIndex, 3> src{};
  std::int32_t imm = 0;
  std::int32_t aux = -1;
  std::int32_t target = -1;
  bool switch_hint = false;
  // Body name for CREATE; kept so validate() can report unresolved entries.
  std::string body;
  int line = 0;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct DataWord {
  Word addr = 0;
  Word value = 0;
  friend bool operator==(const DataWord&, const DataWord&) = default;
};

struct Program {
  std::vector<Instruction> instructions;
  std::map<std::string, int> labels;
  std::map<std::string, int> entries;
  // Initial memory contents from .data/.word directives, in source order.
  std::vector<DataWord> data;

  // Index of the root thread body: "main" if present, else 0.
  int root_entry() const;
  // Body that contains instruction `pc`, or empty if none.
  std::string body_of(int pc) const;

  friend bool operator==(const Program&, const Program&) = default;
};

class AssemblyError : public std::runtime_error {
 public:
  AssemblyError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

std::string_view mnemonic(Opcode op);
std::optional<Opcode> parse_mnemonic(std::string_view text);

bool is_control(Opcode op);
bool is_long_latency(Opcode op);
// Architectural registers read by the instruction (r0 included when named).
std::vector<RegIndex> source_registers(const Instruction& instr);
// Destination register, or nullopt for opcodes that write none.
std::optional<RegIndex> destination_register(const Instruction& instr);

Program assemble(std::string_view source);

// Marks every instruction that reads a register last defined by a
// long-latency producer in the same basic block.
Program annotate_hints(Program program);

// Basic block leaders in ascending order.
std::vector<int> block_leaders(const Program& program);

std::vector<std::string> validate(const Program& program);

// One instruction in assembly syntax, including the ".sw" suffix when hinted.
std::string disassemble(const Instruction& instr, const Program& program);

}  // namespace mgsim2
