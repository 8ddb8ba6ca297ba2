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

#include "mgsim2/isa.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

namespace mgsim2 {

namespace {

constexpr std::array<std::string_view, kNumOpcodes> kMnemonics = {
    "add", "sub",  "mul",      "addi",   "ld",   "st",
    "beq", "bne",  "jmp",      "halt",   "allocate", "create",
    "sync", "release", "getidx", "putsh", "getsh",
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

bool is_ident(std::string_view s) {
  if (s.empty() || !is_ident_start(s.front())) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '.';
  });
}

std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

struct PendingRef {
  int instr;
  std::string label;
  int line;
  bool is_body;
};

class Parser {
 public:
  explicit Parser(std::string_view source) : source_(source) {}

  Program run() {
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= source_.size()) {
      std::size_t end = source_.find('\n', pos);
      if (end == std::string_view::npos) end = source_.size();
      ++line_no;
      parse_line(source_.substr(pos, end - pos), line_no);
      pos = end + 1;
    }
    resolve();
    return std::move(program_);
  }

 private:
  [[noreturn]] void fail(int line, const std::string& what) const {
    throw AssemblyError(line, what);
  }

  void define_label(std::string_view name, int line) {
    if (!is_ident(name)) fail(line, "invalid label '" + std::string(name) + "'");
    auto [it, inserted] = program_.labels.emplace(
        std::string(name), static_cast<int>(program_.instructions.size()));
    if (!inserted) fail(line, "duplicate label '" + std::string(name) + "'");
  }

  std::int64_t parse_int(std::string_view tok, int line) const {
    tok = trim(tok);
    bool neg = false;
    if (!tok.empty() && (tok.front() == '-' || tok.front() == '+')) {
      neg = tok.front() == '-';
      tok.remove_prefix(1);
    }
    int base = 10;
    if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X')) {
      base = 16;
      tok.remove_prefix(2);
    }
    std::uint64_t value = 0;
    auto [ptr, ec] =
        std::from_chars(tok.data(), tok.data() + tok.size(), value, base);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      fail(line, "invalid immediate '" + std::string(tok) + "'");
    }
    auto v = static_cast<std::int64_t>(value);
    return neg ? -v : v;
  }

  std::int32_t parse_imm(std::string_view tok, int line) const {
    std::int64_t v = parse_int(tok, line);
    if (v < INT32_MIN || v > static_cast<std::int64_t>(UINT32_MAX)) {
      fail(line, "immediate out of 32-bit range '" + std::string(tok) + "'");
    }
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(v));
  }

  RegIndex parse_reg(std::string_view tok, int line) const {
    tok = trim(tok);
    if (tok.size() < 2 || (tok[0] != 'r' && tok[0] != 'R')) {
      fail(line, "expected register, got '" + std::string(tok) + "'");
    }
    int value = 0;
    auto digits = tok.substr(1);
    auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) {
      fail(line, "expected register, got '" + std::string(tok) + "'");
    }
    if (value < 0 || value >= kNumRegisters) {
      fail(line, "register index out of range '" + std::string(tok) + "'");
    }
    return value;
  }

  // imm(rN)
  std::pair<std::int32_t, RegIndex> parse_mem(std::string_view tok,
                                              int line) const {
    auto open = tok.find('(');
    auto close = tok.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos ||
        close < open || trim(tok.substr(close + 1)).size() != 0) {
      fail(line, "expected memory operand imm(rN), got '" + std::string(tok) +
                     "'");
    }
    auto imm_text = trim(tok.substr(0, open));
    std::int32_t imm = imm_text.empty() ? 0 : parse_imm(imm_text, line);
    return {imm, parse_reg(tok.substr(open + 1, close - open - 1), line)};
  }

  void expect_count(const std::vector<std::string_view>& ops, std::size_t lo,
                    std::size_t hi, std::string_view name, int line) const {
    if (ops.size() < lo || ops.size() > hi) {
      std::ostringstream os;
      os << "'" << name << "' expects ";
      if (lo == hi) {
        os << lo;
      } else {
        os << lo << " to " << hi;
      }
      os << " operands, got " << ops.size();
      fail(line, os.str());
    }
  }

  void refer(std::string_view label, int line, bool is_body) {
    if (!is_ident(label)) {
      fail(line, "invalid label '" + std::string(label) + "'");
    }
    refs_.push_back({static_cast<int>(program_.instructions.size()),
                     std::string(label), line, is_body});
  }

  void parse_directive(std::string_view text, int line) {
    auto space = text.find_first_of(" \t");
    auto name = text.substr(0, space);
    auto rest = space == std::string_view::npos ? std::string_view{}
                                                : trim(text.substr(space));
    if (name == ".body") {
      if (!is_ident(rest)) fail(line, ".body expects a name");
      define_label(rest, line);
      program_.entries.emplace(std::string(rest),
                               static_cast<int>(program_.instructions.size()));
    } else if (name == ".data") {
      std::int64_t addr = parse_int(rest, line);
      if (addr < 0 || addr > UINT32_MAX || addr % 4 != 0) {
        fail(line, ".data address must be a 4-byte aligned 32-bit value");
      }
      data_cursor_ = static_cast<Word>(addr);
    } else if (name == ".word") {
      for (auto tok : split_operands(rest)) {
        program_.data.push_back(
            {data_cursor_, static_cast<Word>(parse_imm(tok, line))});
        data_cursor_ += 4;
      }
    } else {
      fail(line, "unknown directive '" + std::string(name) + "'");
    }
  }

  void parse_line(std::string_view raw, int line) {
    auto comment = raw.find(';');
    if (comment != std::string_view::npos) raw = raw.substr(0, comment);
    auto text = trim(raw);
    // Leading labels.
    while (true) {
      auto colon = text.find(':');
      if (colon == std::string_view::npos) break;
      auto name = trim(text.substr(0, colon));
      if (!is_ident(name) || name.front() == '.') break;
      define_label(name, line);
      text = trim(text.substr(colon + 1));
    }
    if (text.empty()) return;
    if (text.front() == '.') {
      parse_directive(text, line);
      return;
    }
    if (program_.instructions.empty() && program_.entries.empty()) {
      // Code before any .body belongs to the implicit root body.
      program_.entries.emplace("main", 0);
      program_.labels.emplace("main", 0);
    }

    auto space = text.find_first_of(" \t");
    auto name = text.substr(0, space);
    auto rest = space == std::string_view::npos ? std::string_view{}
                                                : text.substr(space);
    Instruction in;
    in.line = line;
    if (name.size() > 3 && name.substr(name.size() - 3) == ".sw") {
      in.switch_hint = true;
      name.remove_suffix(3);
    }
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](char c) {
      return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    });
    auto op = parse_mnemonic(lower);
    if (!op) fail(line, "unknown mnemonic '" + std::string(name) + "'");
    in.op = *op;
    auto ops = split_operands(rest);

    switch (in.op) {
      case Opcode::ADD:
      case Opcode::SUB:
      case Opcode::MUL:
        expect_count(ops, 3, 3, lower, line);
        in.dst = parse_reg(ops[0], line);
        in.src[0] = parse_reg(ops[1], line);
        in.src[1] = parse_reg(ops[2], line);
        break;
      case Opcode::ADDI:
        expect_count(ops, 3, 3, lower, line);
        in.dst = parse_reg(ops[0], line);
        in.src[0] = parse_reg(ops[1], line);
        in.imm = parse_imm(ops[2], line);
        break;
      case Opcode::LD: {
        expect_count(ops, 2, 2, lower, line);
        in.dst = parse_reg(ops[0], line);
        auto [imm, base] = parse_mem(ops[1], line);
        in.imm = imm;
        in.src[0] = base;
        break;
      }
      case Opcode::ST: {
        expect_count(ops, 2, 2, lower, line);
        in.src[0] = parse_reg(ops[0], line);
        auto [imm, base] = parse_mem(ops[1], line);
        in.imm = imm;
        in.src[1] = base;
        break;
      }
      case Opcode::BEQ:
      case Opcode::BNE:
        expect_count(ops, 3, 3, lower, line);
        in.src[0] = parse_reg(ops[0], line);
        in.src[1] = parse_reg(ops[1], line);
        refer(ops[2], line, false);
        break;
      case Opcode::JMP:
        expect_count(ops, 1, 1, lower, line);
        refer(ops[0], line, false);
        break;
      case Opcode::HALT:
        expect_count(ops, 0, 0, lower, line);
        break;
      case Opcode::ALLOCATE:
        expect_count(ops, 2, 3, lower, line);
        in.dst = parse_reg(ops[0], line);
        in.imm = parse_imm(ops[1], line);
        if (in.imm < 0) fail(line, "allocation size must be >= 0");
        if (ops.size() == 3) {
          if (ops[2].empty() || ops[2].front() != '@') {
            fail(line, "placement hint must be written @core");
          }
          std::int64_t core = parse_int(ops[2].substr(1), line);
          if (core < 0 || core > INT32_MAX) fail(line, "invalid core id");
          in.aux = static_cast<std::int32_t>(core);
        }
        break;
      case Opcode::CREATE:
        expect_count(ops, 6, 7, lower, line);
        in.dst = parse_reg(ops[0], line);
        in.src[0] = parse_reg(ops[1], line);
        in.src[1] = parse_reg(ops[2], line);
        in.src[2] = parse_reg(ops[3], line);
        in.imm = parse_imm(ops[4], line);
        if (in.imm == 0) fail(line, "create step must be nonzero");
        if (!is_ident(ops[5])) fail(line, "create expects a body name");
        in.body = std::string(ops[5]);
        refer(ops[5], line, true);
        if (ops.size() == 7) in.aux = parse_reg(ops[6], line);
        break;
      case Opcode::SYNC:
        expect_count(ops, 2, 2, lower, line);
        in.dst = parse_reg(ops[0], line);
        in.src[0] = parse_reg(ops[1], line);
        break;
      case Opcode::RELEASE:
        expect_count(ops, 1, 1, lower, line);
        in.src[0] = parse_reg(ops[0], line);
        break;
      case Opcode::GETIDX:
        expect_count(ops, 1, 1, lower, line);
        in.dst = parse_reg(ops[0], line);
        break;
      case Opcode::PUTSH:
        expect_count(ops, 1, 2, lower, line);
        in.src[0] = parse_reg(ops[0], line);
        if (ops.size() == 2) {
          in.src[1] = parse_reg(ops[1], line);
          in.aux = 1;
        }
        break;
      case Opcode::GETSH:
        expect_count(ops, 1, 2, lower, line);
        in.dst = parse_reg(ops[0], line);
        if (ops.size() == 2) {
          in.src[0] = parse_reg(ops[1], line);
          in.aux = 1;
        }
        break;
    }
    program_.instructions.push_back(std::move(in));
  }

  void resolve() {
    const int n = static_cast<int>(program_.instructions.size());
    for (const auto& ref : refs_) {
      auto& in = program_.instructions[ref.instr];
      if (ref.is_body) {
        // Unknown bodies are left unresolved for validate() to report.
        auto it = program_.entries.find(ref.label);
        in.target = (it != program_.entries.end() && it->second < n)
                        ? it->second
                        : -1;
        continue;
      }
      auto it = program_.labels.find(ref.label);
      if (it == program_.labels.end()) {
        fail(ref.line, "undefined label '" + ref.label + "'");
      }
      if (it->second >= n) {
        fail(ref.line, "label '" + ref.label + "' does not name an instruction");
      }
      in.target = it->second;
    }
  }

  std::string_view source_;
  Program program_;
  std::vector<PendingRef> refs_;
  Word data_cursor_ = 0;
};

}  // namespace

AssemblyError::AssemblyError(int line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what),
      line_(line) {}

int Program::root_entry() const {
  auto it = entries.find("main");
  return it == entries.end() ? 0 : it->second;
}

std::string Program::body_of(int pc) const {
  std::string best;
  int best_start = -1;
  for (const auto& [name, start] : entries) {
    if (start <= pc && start > best_start) {
      best = name;
      best_start = start;
    }
  }
  return best;
}

std::string_view mnemonic(Opcode op) {
  return kMnemonics[static_cast<std::size_t>(op)];
}

std::optional<Opcode> parse_mnemonic(std::string_view text) {
  for (std::size_t i = 0; i < kMnemonics.size(); ++i) {
    if (kMnemonics[i] == text) return static_cast<Opcode>(i);
  }
  return std::nullopt;
}

bool is_control(Opcode op) {
  return op == Opcode::BEQ || op == Opcode::BNE || op == Opcode::JMP ||
         op == Opcode::HALT;
}

bool is_long_latency(Opcode op) {
  switch (op) {
    case Opcode::LD:
    case Opcode::ALLOCATE:
    case Opcode::CREATE:
    case Opcode::SYNC:
    case Opcode::GETSH:
      return true;
    default:
      return false;
  }
}

std::vector<RegIndex> source_registers(const Instruction& in) {
  switch (in.op) {
    case Opcode::ADD:
    case Opcode::SUB:
    case Opcode::MUL:
    case Opcode::ST:
    case Opcode::BEQ:
    case Opcode::BNE:
      return {in.src[0], in.src[1]};
    case Opcode::ADDI:
    case Opcode::LD:
    case Opcode::SYNC:
    case Opcode::RELEASE:
      return {in.src[0]};
    case Opcode::CREATE:
      if (in.aux >= 0) return {in.src[0], in.src[1], in.src[2], in.aux};
      return {in.src[0], in.src[1], in.src[2]};
    case Opcode::PUTSH:
      if (in.aux == 1) return {in.src[0], in.src[1]};
      return {in.src[0]};
    case Opcode::GETSH:
      if (in.aux == 1) return {in.src[0]};
      return {};
    case Opcode::JMP:
    case Opcode::HALT:
    case Opcode::ALLOCATE:
    case Opcode::GETIDX:
      return {};
  }
  return {};
}

std::optional<RegIndex> destination_register(const Instruction& in) {
  switch (in.op) {
    case Opcode::ST:
    case Opcode::BEQ:
    case Opcode::BNE:
    case Opcode::JMP:
    case Opcode::HALT:
    case Opcode::RELEASE:
    case Opcode::PUTSH:
      return std::nullopt;
    default:
      return in.dst;
  }
}

Program assemble(std::string_view source) { return Parser(source).run(); }

std::vector<int> block_leaders(const Program& program) {
  const int n = static_cast<int>(program.instructions.size());
  std::set<int> leaders;
  if (n > 0) leaders.insert(0);
  for (const auto& [name, idx] : program.labels) {
    if (idx < n) leaders.insert(idx);
  }
  for (const auto& [name, idx] : program.entries) {
    if (idx < n) leaders.insert(idx);
  }
  for (int i = 0; i < n; ++i) {
    const auto& in = program.instructions[i];
    if (is_control(in.op) && i + 1 < n) leaders.insert(i + 1);
    if ((in.op == Opcode::BEQ || in.op == Opcode::BNE ||
         in.op == Opcode::JMP) &&
        in.target >= 0) {
      leaders.insert(in.target);
    }
  }
  return {leaders.begin(), leaders.end()};
}

Program annotate_hints(Program program) {
  auto leaders = block_leaders(program);
  const int n = static_cast<int>(program.instructions.size());
  for (std::size_t b = 0; b < leaders.size(); ++b) {
    const int begin = leaders[b];
    const int end = b + 1 < leaders.size() ? leaders[b + 1] : n;
    // Whether the latest definition of each register in this block is a
    // long-latency producer.
    std::array<bool, kNumRegisters> long_def{};
    for (int i = begin; i < end; ++i) {
      auto& in = program.instructions[i];
      for (RegIndex r : source_registers(in)) {
        if (r != 0 && long_def[r]) in.switch_hint = true;
      }
      if (auto d = destination_register(in); d && *d != 0) {
        long_def[*d] = is_long_latency(in.op);
      }
    }
  }
  return program;
}

std::vector<std::string> validate(const Program& program) {
  std::vector<std::string> diags;
  const int n = static_cast<int>(program.instructions.size());
  for (const auto& in : program.instructions) {
    if (in.op == Opcode::CREATE && in.target < 0) {
      diags.push_back("unknown entry '" + in.body + "'");
    }
  }
  std::vector<std::pair<int, std::string>> bodies;
  for (const auto& [name, start] : program.entries) {
    bodies.emplace_back(start, name);
  }
  std::sort(bodies.begin(), bodies.end());
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const int last =
        (i + 1 < bodies.size() ? bodies[i + 1].first : n) - 1;
    const bool terminates =
        last >= bodies[i].first &&
        (program.instructions[last].op == Opcode::HALT ||
         program.instructions[last].op == Opcode::JMP);
    if (!terminates) {
      diags.push_back("thread body '" + bodies[i].second +
                      "' does not terminate");
    }
  }
  if (n == 0) diags.push_back("program is empty");
  return diags;
}

std::string disassemble(const Instruction& in, const Program& program) {
  auto label_of = [&](int target) {
    for (const auto& [name, idx] : program.labels) {
      if (idx == target) return name;
    }
    return std::to_string(target);
  };
  auto r = [](RegIndex i) { return "r" + std::to_string(i); };
  std::ostringstream os;
  os << mnemonic(in.op) << (in.switch_hint ? ".sw" : "");
  switch (in.op) {
    case Opcode::ADD:
    case Opcode::SUB:
    case Opcode::MUL:
      os << ' ' << r(in.dst) << ", " << r(in.src[0]) << ", " << r(in.src[1]);
      break;
    case Opcode::ADDI:
      os << ' ' << r(in.dst) << ", " << r(in.src[0]) << ", " << in.imm;
      break;
    case Opcode::LD:
      os << ' ' << r(in.dst) << ", " << in.imm << '(' << r(in.src[0]) << ')';
      break;
    case Opcode::ST:
      os << ' ' << r(in.src[0]) << ", " << in.imm << '(' << r(in.src[1])
         << ')';
      break;
    case Opcode::BEQ:
    case Opcode::BNE:
      os << ' ' << r(in.src[0]) << ", " << r(in.src[1]) << ", "
         << label_of(in.target);
      break;
    case Opcode::JMP:
      os << ' ' << label_of(in.target);
      break;
    case Opcode::HALT:
      break;
    case Opcode::ALLOCATE:
      os << ' ' << r(in.dst) << ", " << in.imm;
      if (in.aux >= 0) os << ", @" << in.aux;
      break;
    case Opcode::CREATE:
      os << ' ' << r(in.dst) << ", " << r(in.src[0]) << ", " << r(in.src[1])
         << ", " << r(in.src[2]) << ", " << in.imm << ", " << in.body;
      if (in.aux >= 0) os << ", " << r(in.aux);
      break;
    case Opcode::SYNC:
      os << ' ' << r(in.dst) << ", " << r(in.src[0]);
      break;
    case Opcode::RELEASE:
      os << ' ' << r(in.src[0]);
      break;
    case Opcode::GETIDX:
      os << ' ' << r(in.dst);
      break;
    case Opcode::PUTSH:
      os << ' ' << r(in.src[0]);
      if (in.aux == 1) os << ", " << r(in.src[1]);
      break;
    case Opcode::GETSH:
      os << ' ' << r(in.dst);
      if (in.aux == 1) os << ", " << r(in.src[0]);
      break;
  }
  return os.str();
}

}  // namespace mgsim2
