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
#include <stdexcept>
#include <vector>

#include "mgsim2/isa.hpp"
#include "mgsim2/types.hpp"

namespace mgsim2 {

struct ThreadTrace {
  FamilyId family = 0;
  std::int64_t index = 0;
  std::vector<int> pcs;  // committed instructions in program order
};

struct OracleResult {
  std::vector<Word> memory;
  std::vector<ThreadTrace> traces;
  std::uint64_t loads = 0;
  std::uint64_t stores = 0;
};

// The oracle could not finish: a channel read before its producer ran, a
// memory fault, or the step budget ran out.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reference semantics: every CREATE runs its threads to completion in
// ascending index order, depth-first, before the creator continues.
// Allocation always succeeds; synchronization is immediate.
OracleResult sequential_oracle(const Program& program,
                               std::size_t memory_bytes = 1u << 20,
                               std::uint64_t max_steps = 100'000'000);

}  // namespace mgsim2
