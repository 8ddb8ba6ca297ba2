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
#include <string>

namespace mgsim2 {

using Word = std::uint32_t;
using Cycle = std::uint64_t;
using CoreId = int;
using SlotId = int;
using RegIndex = int;
using FamilyId = std::int32_t;
using AllocId = std::int32_t;

inline constexpr int kNumRegisters = 32;
// Hidden per-context cell holding the incoming shared channel value.
inline constexpr RegIndex kSharedInCell = kNumRegisters;
inline constexpr int kMaxPendingPerThread = kNumRegisters - 1;
inline constexpr FamilyId kRootFamily = 0;

// A register cell somewhere on the chip; the destination of split-phase
// completions.
struct RegRef {
  CoreId core = 0;
  SlotId slot = 0;
  RegIndex reg = 0;

  friend bool operator==(const RegRef&, const RegRef&) = default;
};

// Raised when the simulated machine reaches a state the model forbids
// (double write, double release, memory fault, ...). The run aborts with the
// message as diagnostic.
class SimFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mgsim2
