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

#include "mgsim2/kernels.hpp"

#include <climits>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "mgsim2/memory.hpp"
#include "mgsim2/oracle.hpp"

namespace mgsim2::kernels {

Program KernelSpec::program() const { return annotate_hints(assemble(source)); }

namespace {

std::string hex(Word v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

// Root body: grab the whole chip, run `body` over [0, n), join, release.
std::string root_over_chip(std::int64_t n, const std::string& body,
                           bool seeded = false) {
  std::ostringstream os;
  os << ".body main\n"
     << "        allocate r1, 0\n"
     << "        beq r1, r0, main        ; retry until granted\n"
     << "        addi r2, r0, 0\n"
     << "        addi r3, r0, " << n << "\n"
     << "        create r4, r1, r2, r3, 1, " << body << (seeded ? ", r0" : "")
     << "\n"
     << "        bne r4, r0, created     ; wait for the handle\n"
     << "created:\n"
     << "        sync r5, r4\n"
     << "        bne r5, r0, joined\n"
     << "joined:\n";
  return os.str();
}

KernelSpec finish(std::string name, std::string source,
                  std::map<std::string, std::int64_t> params,
                  std::vector<std::string> claims, bool completes = true) {
  KernelSpec k{std::move(name), std::move(source), std::move(params), {},
               std::move(claims)};
  if (completes) k.expected = sequential_oracle(k.program()).memory;
  return k;
}

}  // namespace

KernelSpec regular(std::int64_t n, std::int32_t a, std::int32_t b,
                   const std::vector<Word>& x) {
  if (n < 0 || static_cast<std::size_t>(n) > x.size()) {
    throw std::invalid_argument("regular: need n <= x.size()");
  }
  std::ostringstream os;
  os << "; out[i] = " << a << " * x[i] + " << b << "\n"
     << ".data " << hex(kInputBase) << "\n";
  for (std::int64_t i = 0; i < n; ++i) {
    os << (i % 8 == 0 ? ".word " : ", ") << x[static_cast<std::size_t>(i)];
    if (i % 8 == 7 || i + 1 == n) os << "\n";
  }
  os << root_over_chip(n, "axpb")
     << "        release r1\n"
     << "        halt\n"
     << ".body axpb\n"
     << "        getidx r1\n"
     << "        addi r2, r0, 4\n"
     << "        mul r3, r1, r2\n"
     << "        ld r4, " << hex(kInputBase) << "(r3)\n"
     << "        addi r5, r0, " << a << "\n"
     << "        mul r6, r4, r5\n"
     << "        addi r6, r6, " << b << "\n"
     << "        st r6, " << hex(kOutputBase) << "(r3)\n"
     << "        halt\n";
  return finish("regular", os.str(), {{"n", n}, {"a", a}, {"b", b}},
                {"oracle-equivalence", "determinism", "coherency-traffic"});
}

std::vector<Word> regular_inputs(std::int64_t n, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<Word> dist(0, 999);
  std::vector<Word> x(static_cast<std::size_t>(n < 0 ? 0 : n));
  for (auto& v : x) v = dist(gen);
  return x;
}

KernelSpec regular(std::int64_t n, std::uint32_t seed) {
  auto k = regular(n, 3, 7, regular_inputs(n, seed));
  k.params["seed"] = seed;
  return k;
}

KernelSpec heterogeneous(std::int64_t n, std::int64_t scale) {
  std::ostringstream os;
  os << "; thread i spins i * " << scale << " times\n"
     << root_over_chip(n, "spin")
     << "        release r1\n"
     << "        halt\n"
     << ".body spin\n"
     << "        getidx r1\n"
     << "        addi r2, r0, " << scale << "\n"
     << "        mul r3, r1, r2\n"
     << "        addi r4, r0, 0\n"
     << "loop:\n"
     << "        beq r3, r0, done\n"
     << "        addi r4, r4, 1\n"
     << "        addi r3, r3, -1\n"
     << "        jmp loop\n"
     << "done:\n"
     << "        addi r5, r0, 4\n"
     << "        mul r6, r1, r5\n"
     << "        st r4, " << hex(kOutputBase) << "(r6)\n"
     << "        halt\n";
  return finish("heterogeneous", os.str(), {{"n", n}, {"scale", scale}},
                {"oracle-equivalence", "load-balance"});
}

KernelSpec chain(std::int64_t n) {
  std::ostringstream os;
  os << "; running sum over a shared channel\n"
     << root_over_chip(n, "link", true)
     << "        getsh r6, r4\n"
     << "        st r6, " << hex(kResultAddr) << "(r0)\n"
     << "        release r1\n"
     << "        halt\n"
     << ".body link\n"
     << "        getidx r1\n"
     << "        getsh r2\n"
     << "        add r3, r2, r1\n"
     << "        putsh r3\n"
     << "        addi r4, r0, 4\n"
     << "        mul r5, r1, r4\n"
     << "        st r3, " << hex(kOutputBase) << "(r5)\n"
     << "        halt\n";
  return finish("chain", os.str(), {{"n", n}},
                {"oracle-equivalence", "shared-chain", "determinism"});
}

KernelSpec loaduse(std::int64_t threads, std::int64_t iterations) {
  constexpr int kLine = 16;
  std::ostringstream os;
  os << "; cold load then dependent add, one line per iteration\n"
     << ".data " << hex(kInputBase) << "\n";
  for (std::int64_t t = 0; t < threads; ++t) {
    for (std::int64_t k = 0; k < iterations; ++k) {
      os << ".word " << (t * 100 + k + 1) << ", 0, 0, 0\n";
    }
  }
  os << ".body main\n"
     << "        allocate r1, 1\n"
     << "        beq r1, r0, main\n"
     << "        addi r2, r0, 0\n"
     << "        addi r3, r0, " << threads << "\n"
     << "        create r4, r1, r2, r3, 1, worker\n"
     << "        bne r4, r0, created\n"
     << "created:\n"
     << "        sync r5, r4\n"
     << "        bne r5, r0, joined\n"
     << "joined:\n"
     << "        release r1\n"
     << "        halt\n"
     << ".body worker\n"
     << "        getidx r1\n"
     << "        addi r2, r0, " << iterations * kLine << "\n"
     << "        mul r3, r1, r2\n"
     << "        addi r7, r0, " << iterations << "\n"
     << "loop:\n"
     << "        ld r4, " << hex(kInputBase) << "(r3)\n"
     << "        add r5, r4, r4\n"
     << "        st r5, " << hex(kOutputBase) << "(r3)\n"
     << "        addi r3, r3, " << kLine << "\n"
     << "        addi r7, r7, -1\n"
     << "        bne r7, r0, loop\n"
     << "        halt\n";
  return finish("loaduse", os.str(),
                {{"threads", threads}, {"iterations", iterations}},
                {"oracle-equivalence", "switch-hints"});
}

static std::string marker_body() {
  std::ostringstream os;
  os << ".body marker\n"
     << "        getidx r1\n"
     << "        addi r2, r0, 4\n"
     << "        mul r3, r1, r2\n"
     << "        addi r4, r1, 100\n"
     << "        st r4, " << hex(kOutputBase) << "(r3)\n"
     << "        halt\n";
  return os.str();
}

KernelSpec starvation(int p) {
  if (p < 1) throw std::invalid_argument("starvation: p must be >= 1");
  std::ostringstream os;
  if (p == 1) {
    os << "; a lone root has nobody to compete with\n"
       << root_over_chip(1, "marker")
       << "        release r1\n"
       << "        halt\n"
       << marker_body();
    return finish("starvation", os.str(), {{"p", 1}},
                  {"oracle-equivalence"});
  }
  {
    os << "; both threads hold the chip and want one more core\n"
       << root_over_chip(2, "greedy")
       << "        release r1\n"
       << "        halt\n"
       << ".body greedy\n"
       << "retry:\n"
       << "        allocate r1, 1\n"
       << "        beq r1, r0, retry\n"
       << "        release r1\n"
       << "        halt\n";
    return finish("starvation", os.str(), {{"p", p}},
                  {"deadlock-starvation"}, false);
  }
}

KernelSpec starvation_sequential() {
  std::ostringstream os;
  os << "; two whole-chip requests served one after the other\n"
     << ".body main\n"
     << "        addi r2, r0, 0\n"
     << "        addi r3, r0, 1\n"
     << "        create r4, r0, r2, r3, 1, patient\n"
     << "        bne r4, r0, grab\n"
     << "grab:\n"
     << "        allocate r1, 0\n"
     << "        beq r1, r0, grab\n"
     << "        create r6, r1, r2, r3, 1, marker\n"
     << "        bne r6, r0, b_created\n"
     << "b_created:\n"
     << "        sync r7, r6\n"
     << "        bne r7, r0, b_joined\n"
     << "b_joined:\n"
     << "        release r1\n"
     << "        sync r5, r4\n"
     << "        bne r5, r0, a_joined\n"
     << "a_joined:\n"
     << "        halt\n"
     << ".body patient\n"
     << "        addi r2, r0, 1\n"
     << "        addi r3, r0, 2\n"
     << "retry:\n"
     << "        allocate r1, 0\n"
     << "        beq r1, r0, retry\n"
     << "        create r4, r1, r2, r3, 1, marker\n"
     << "        bne r4, r0, created\n"
     << "created:\n"
     << "        sync r5, r4\n"
     << "        bne r5, r0, joined\n"
     << "joined:\n"
     << "        release r1\n"
     << "        halt\n"
     << marker_body();
  return finish("starvation_ok", os.str(), {},
                {"oracle-equivalence", "no-false-starvation"});
}

KernelSpec channel_cycle() {
  std::ostringstream os;
  os << "; the child's seed is only sent after the parent syncs\n"
     << ".body main\n"
     << "        addi r2, r0, 0\n"
     << "        addi r3, r0, 1\n"
     << "        create r4, r0, r2, r3, 1, consumer\n"
     << "        bne r4, r0, created\n"
     << "created:\n"
     << "        sync r5, r4\n"
     << "        bne r5, r0, joined\n"
     << "joined:\n"
     << "        addi r6, r0, 7\n"
     << "        putsh r6, r4\n"
     << "        halt\n"
     << ".body consumer\n"
     << "        getsh r1\n"
     << "        st r1, " << hex(kOutputBase) << "(r0)\n"
     << "        halt\n";
  return finish("channel_cycle", os.str(), {}, {"deadlock-dataflow"}, false);
}

KernelSpec adjacency_probe() {
  std::ostringstream os;
  os << "; remote span on core 2, nested span on cores 3..5\n"
     << ".body main\n"
     << "        allocate r1, 1, @2\n"
     << "        beq r1, r0, main\n"
     << "        addi r2, r0, 0\n"
     << "        addi r3, r0, 1\n"
     << "        create r4, r1, r2, r3, 1, hub\n"
     << "        bne r4, r0, created\n"
     << "created:\n"
     << "        sync r5, r4\n"
     << "        bne r5, r0, joined\n"
     << "joined:\n"
     << "        release r1\n"
     << "        halt\n"
     << ".body hub\n"
     << "        allocate r1, 3, @3\n"
     << "        beq r1, r0, hub\n"
     << "        addi r2, r0, 0\n"
     << "        addi r3, r0, 6\n"
     << "        create r4, r1, r2, r3, 1, leaf\n"
     << "        bne r4, r0, hub_created\n"
     << "hub_created:\n"
     << "        sync r5, r4\n"
     << "        bne r5, r0, hub_joined\n"
     << "hub_joined:\n"
     << "        release r1\n"
     << "        halt\n"
     << ".body leaf\n"
     << "        getidx r1\n"
     << "        addi r2, r0, 4\n"
     << "        mul r3, r1, r2\n"
     << "        st r1, " << hex(kOutputBase) << "(r3)\n"
     << "        halt\n";
  return finish("adjacency", os.str(), {}, {"placement-locality"});
}

std::vector<KernelSpec> corpus() {
  return {regular(256), heterogeneous(64, 16), chain(64), loaduse(4),
          starvation(2)};
}

std::vector<std::string> names() {
  return {"regular", "heterogeneous", "chain",        "loaduse",
          "starvation", "starvation_ok", "channel_cycle", "adjacency"};
}

void write_corpus(const std::filesystem::path& dir,
                  const std::vector<KernelSpec>& specs) {
  std::filesystem::create_directories(dir);
  for (const auto& k : specs) {
    std::ofstream(dir / (k.name + ".masm")) << k.source;
    if (!k.expected.empty()) {
      std::ofstream(dir / (k.name + ".expected")) << image_to_text(k.expected);
    }
  }
}

KernelSpec make(const std::string& name,
                std::map<std::string, std::int64_t> params) {
  auto take = [&](const char* key, std::int64_t fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    const auto v = it->second;
    params.erase(it);
    return v;
  };
  auto narrow = [&](const char* key, std::int64_t v) {
    if (v < INT32_MIN || v > INT32_MAX)
      throw std::invalid_argument(name + ": parameter '" + key +
                                  "' out of range");
    return static_cast<std::int32_t>(v);
  };
  KernelSpec k;
  if (name == "regular") {
    const auto n = take("n", 256);
    const auto seed = take("seed", 1);
    const auto a = take("a", 3);
    const auto b = take("b", 7);
    if (seed < 0 || seed > UINT32_MAX)
      throw std::invalid_argument("regular: parameter 'seed' out of range");
    k = regular(n, narrow("a", a), narrow("b", b),
                regular_inputs(n, static_cast<std::uint32_t>(seed)));
    k.params["seed"] = seed;
  } else if (name == "heterogeneous") {
    const auto n = take("n", 64);
    k = heterogeneous(n, take("scale", 16));
  } else if (name == "chain") {
    k = chain(take("n", 64));
  } else if (name == "loaduse") {
    const auto threads = take("threads", 4);
    k = loaduse(threads, take("iterations", 8));
  } else if (name == "starvation") {
    k = starvation(narrow("p", take("p", 2)));
  } else if (name == "starvation_ok") {
    k = starvation_sequential();
  } else if (name == "channel_cycle") {
    k = channel_cycle();
  } else if (name == "adjacency") {
    k = adjacency_probe();
  } else {
    throw std::invalid_argument("unknown kernel '" + name + "'");
  }
  if (!params.empty())
    throw std::invalid_argument(name + ": unknown parameter '" +
                                params.begin()->first + "'");
  return k;
}

KernelSpec by_name(const std::string& name) { return make(name, {}); }

}  // namespace mgsim2::kernels
