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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mgsim2/isa.hpp"
#include "mgsim2/types.hpp"

namespace mgsim2::kernels {

// Memory layout shared by the generators.
inline constexpr Word kInputBase = 0x1000;
inline constexpr Word kOutputBase = 0x10000;
inline constexpr Word kResultAddr = 0x20000;

struct KernelSpec {
  std::string name;
  std::string source;
  std::map<std::string, std::int64_t> params;
  // Sequential-oracle image; empty for kernels that must not complete.
  std::vector<Word> expected;
  std::vector<std::string> claims;

  Program program() const;  // assembled and hint-annotated
};

// out[i] = a * x[i] + b over a family of N threads.
KernelSpec regular(std::int64_t n, std::int32_t a, std::int32_t b,
                   const std::vector<Word>& x);
// x[i] uniform in [0, 999] from a fixed-seed generator.
std::vector<Word> regular_inputs(std::int64_t n, std::uint32_t seed);
// a = 3, b = 7 over regular_inputs(n, seed).
KernelSpec regular(std::int64_t n, std::uint32_t seed = 1);

// Thread i spins i * scale iterations, then stores its count.
KernelSpec heterogeneous(std::int64_t n, std::int64_t scale);

// Thread i forwards shared_in + i; out[i] holds the prefix sum and the
// family's outgoing value lands at kResultAddr.
KernelSpec chain(std::int64_t n);

// Each thread repeats: cold load, dependent add, store.
KernelSpec loaduse(std::int64_t threads, std::int64_t iterations = 8);

// With p >= 2: two threads hold the whole chip through their family and
// each retries for one more core. With p == 1: a lone root that allocates,
// runs one thread and releases.
KernelSpec starvation(int p);
// Two competitors for the whole chip, satisfiable one after the other.
KernelSpec starvation_sequential();

// Parent suspended on sync of a child whose thread waits for a seed the
// parent only sends after the sync.
KernelSpec channel_cycle();

// Nested remote placement: a hub thread on core 2 creates a family on
// cores 3..5. Needs at least 6 cores.
KernelSpec adjacency_probe();

// The five-kernel corpus at its reference parameters.
std::vector<KernelSpec> corpus();

// Writes <dir>/<name>.masm and, when the kernel completes, <name>.expected.
void write_corpus(const std::filesystem::path& dir,
                  const std::vector<KernelSpec>& specs);

// Builds a kernel from its name and parameters; missing parameters take the
// reference values. Throws std::invalid_argument on unknown names or keys.
KernelSpec make(const std::string& name,
                std::map<std::string, std::int64_t> params);
KernelSpec by_name(const std::string& name);
std::vector<std::string> names();

}  // namespace mgsim2::kernels
