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
#include <map>
#include <optional>
#include <string>

#include "mgsim2/sim.hpp"

namespace mgsim2 {

inline constexpr int kRecordSchemaVersion = 1;

// One simulation cell: configuration echo, kernel identity, metrics, outcome.
struct RunRecord {
  ChipConfig config;
  std::string kernel;
  std::map<std::string, std::int64_t> params;
  Metrics metrics;
  Outcome outcome = Outcome::FAULT;
  std::optional<std::uint64_t> memory_hash;
};

RunRecord make_record(const ChipConfig& config, std::string kernel,
                      std::map<std::string, std::int64_t> params,
                      const RunResult& result);

// Header and rows end with '\n'. New columns are only ever appended.
std::string csv_header();
std::string to_csv(const RunRecord& record);
// One JSON object per line.
std::string to_json(const RunRecord& record);

const char* to_string(TopologyKind kind);
const char* to_string(CoherencyPolicy policy);

}  // namespace mgsim2
