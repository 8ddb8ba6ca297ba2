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

#include <benchmark/benchmark.h>

#include "mgsim2/kernels.hpp"
#include "mgsim2/oracle.hpp"
#include "mgsim2/sim.hpp"

namespace {

using namespace mgsim2;

void simulate(benchmark::State& state, const kernels::KernelSpec& spec) {
  ChipConfig config;
  config.cores = static_cast<int>(state.range(0));
  const auto program = spec.program();
  Cycle cycles = 0;
  for (auto _ : state) {
    auto r = run(config, program);
    cycles = r.metrics.cycles;
    benchmark::DoNotOptimize(r);
  }
  state.counters["sim_cycles"] = static_cast<double>(cycles);
  state.counters["sim_cycles_per_s"] = benchmark::Counter(
      static_cast<double>(cycles) * static_cast<double>(state.iterations()),
      benchmark::Counter::kIsRate);
}

void BM_Regular(benchmark::State& s) { simulate(s, kernels::regular(256)); }
void BM_Heterogeneous(benchmark::State& s) {
  simulate(s, kernels::heterogeneous(64, 16));
}
void BM_Chain(benchmark::State& s) { simulate(s, kernels::chain(64)); }
void BM_LoadUse(benchmark::State& s) { simulate(s, kernels::loaduse(4)); }

void BM_Oracle(benchmark::State& state) {
  const auto program = kernels::heterogeneous(64, 16).program();
  for (auto _ : state) benchmark::DoNotOptimize(sequential_oracle(program));
}

void BM_Assemble(benchmark::State& state) {
  const auto source = kernels::regular(256).source;
  for (auto _ : state) benchmark::DoNotOptimize(annotate_hints(assemble(source)));
}

}  // namespace

BENCHMARK(BM_Regular)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Heterogeneous)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Chain)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LoadUse)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Oracle)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Assemble)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
