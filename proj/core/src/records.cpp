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

#include "mgsim2/records.hpp"

#include <cstdio>
#include <string>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace mgsim2 {

const char* to_string(TopologyKind kind) {
  return kind == TopologyKind::RING ? "ring" : "line";
}

const char* to_string(CoherencyPolicy policy) {
  return policy == CoherencyPolicy::EAGER ? "eager" : "bulk";
}

RunRecord make_record(const ChipConfig& config, std::string kernel,
                      std::map<std::string, std::int64_t> params,
                      const RunResult& result) {
  RunRecord r{config, std::move(kernel), std::move(params), result.metrics,
              result.outcome, std::nullopt};
  if (result.final_memory) r.memory_hash = image_hash(*result.final_memory);
  return r;
}

namespace {

using Fields = std::vector<std::pair<std::string, std::string>>;

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string params_text(const std::map<std::string, std::int64_t>& params) {
  std::string out;
  for (const auto& [k, v] : params) {
    if (!out.empty()) out += ';';
    out += k + '=' + std::to_string(v);
  }
  return out;
}

Fields fields(const RunRecord& r) {
  const auto& c = r.config;
  const auto& m = r.metrics;
  auto s = [](auto v) { return std::to_string(v); };
  return {
      {"schema", s(kRecordSchemaVersion)},
      {"kernel", r.kernel},
      {"params", params_text(r.params)},
      {"cores", s(c.cores)},
      {"topology", to_string(c.topology)},
      {"hop_latency", s(c.hop_latency)},
      {"thread_slots", s(c.thread_slots)},
      {"hints", c.hints ? "on" : "off"},
      {"coherency", to_string(c.coherency)},
      {"line_bytes", s(c.cache.line_bytes)},
      {"dcache_lines", s(c.cache.dcache_lines)},
      {"icache_lines", s(c.cache.icache_lines)},
      {"d_miss_latency", s(c.cache.d_miss_latency)},
      {"i_miss_latency", s(c.cache.i_miss_latency)},
      {"watchdog_cycles", s(c.watchdog_cycles)},
      {"outcome", to_string(r.outcome)},
      {"cycles", s(m.cycles)},
      {"commits", s(m.commits)},
      {"bubbles", s(m.bubbles)},
      {"flushes", s(m.flushes)},
      {"switch_events", s(m.switch_events)},
      {"utilization", fixed(m.utilization)},
      {"propagation_messages", s(m.propagation_messages)},
      {"control_messages", s(m.control_messages)},
      {"hop_traversals", s(m.hop_traversals)},
      {"loads", s(m.loads)},
      {"stores", s(m.stores)},
      {"d_misses", s(m.d_misses)},
      {"i_misses", s(m.i_misses)},
      {"allocations_denied", s(m.allocations_denied)},
      {"families", s(m.families)},
      {"max_pending_per_thread", s(m.max_pending_per_thread)},
      {"memory_hash", r.memory_hash ? s(*r.memory_hash) : ""},
  };
}

}  // namespace

std::string csv_header() {
  std::string out;
  for (const auto& [k, v] : fields(RunRecord{})) {
    out += out.empty() ? k : "," + k;
  }
  return out + '\n';
}

std::string to_csv(const RunRecord& record) {
  std::string out;
  bool first = true;
  for (const auto& [k, v] : fields(record)) {
    if (!first) out += ',';
    first = false;
    out += v;
  }
  return out + '\n';
}

std::string to_json(const RunRecord& r) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : fields(r)) {
    bool numeric = !v.empty() && v.find_first_not_of("0123456789") == v.npos;
    if (numeric) {
      j[k] = std::stoull(v);
    } else {
      j[k] = v;
    }
  }
  j["params"] = nlohmann::ordered_json(r.params);
  j["utilization"] = r.metrics.utilization;
  nlohmann::ordered_json cores = nlohmann::ordered_json::array();
  for (const auto& k : r.metrics.per_core) {
    cores.push_back({{"commits", k.commits},
                     {"bubbles", k.bubbles},
                     {"flushes", k.flushes},
                     {"switch_events", k.switch_events},
                     {"suspends", k.suspends},
                     {"busy_cycles", k.busy_cycles},
                     {"utilization", k.utilization}});
  }
  j["per_core"] = std::move(cores);
  return j.dump() + '\n';
}

}  // namespace mgsim2
