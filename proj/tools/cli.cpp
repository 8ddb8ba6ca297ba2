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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mgsim2/isa.hpp"
#include "mgsim2/kernels.hpp"
#include "mgsim2/memory.hpp"
#include "mgsim2/oracle.hpp"
#include "mgsim2/records.hpp"
#include "mgsim2/sim.hpp"

namespace mgsim2::cli {
namespace {

namespace fs = std::filesystem;

// A program to simulate, with the identity echoed into records.
struct Workload {
  std::string name;
  std::map<std::string, std::int64_t> params;
  std::string source;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Corpus plus the auxiliary probes, at reference parameters.
std::vector<kernels::KernelSpec> default_generation() {
  auto specs = kernels::corpus();
  specs.push_back(kernels::starvation_sequential());
  specs.push_back(kernels::channel_cycle());
  specs.push_back(kernels::adjacency_probe());
  return specs;
}

// {"kernels": [{"name": "chain", "params": {"n": 64}}, ...]}
std::vector<kernels::KernelSpec> load_corpus_config(const std::string& text) {
  std::vector<kernels::KernelSpec> specs;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& entry : doc.at("kernels")) {
      std::map<std::string, std::int64_t> params;
      if (entry.contains("params")) {
        for (const auto& [key, value] : entry.at("params").items())
          params[key] = value.get<std::int64_t>();
      }
      specs.push_back(kernels::make(entry.at("name").get<std::string>(),
                                    std::move(params)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("corpus config: ") + e.what());
  }
  return specs;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

Workload load_workload(const std::string& program, const std::string& kernel) {
  if (!program.empty() && !kernel.empty()) {
    throw UsageError("--program and --kernel are mutually exclusive");
  }
  if (!program.empty()) {
    return {fs::path(program).stem().string(), {}, read_file(program)};
  }
  if (kernel.empty()) throw UsageError("one of --program or --kernel is required");
  try {
    auto k = kernels::by_name(kernel);
    return {k.name, k.params, k.source};
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

const std::map<std::string, TopologyKind> kTopologies{
    {"ring", TopologyKind::RING}, {"line", TopologyKind::LINE}};
const std::map<std::string, bool> kSwitches{{"on", true}, {"off", false}};
const std::map<std::string, CoherencyPolicy> kPolicies{
    {"eager", CoherencyPolicy::EAGER}, {"bulk", CoherencyPolicy::BULK}};

// Chip options shared by run and sweep.
struct ChipFlags {
  int hop_latency = 2;
  int thread_slots = 64;
  CacheConfig cache;
  Cycle watchdog = 10'000'000;

  void add(CLI::App& app) {
    app.add_option("--hop-latency", hop_latency, "Cycles per NoC hop")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--thread-slots", thread_slots, "Thread slots per core")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--line-bytes", cache.line_bytes, "Cache line size")
        ->capture_default_str();
    app.add_option("--dcache-lines", cache.dcache_lines, "L1D lines")
        ->capture_default_str();
    app.add_option("--icache-lines", cache.icache_lines, "L1I lines")
        ->capture_default_str();
    app.add_option("--d-miss-latency", cache.d_miss_latency,
                   "L1D miss latency in cycles")
        ->capture_default_str();
    app.add_option("--i-miss-latency", cache.i_miss_latency,
                   "L1I miss latency in cycles")
        ->capture_default_str();
    app.add_option("--watchdog", watchdog, "Cycle budget before timeout")
        ->capture_default_str();
  }

  ChipConfig config(int cores, TopologyKind topo, bool hints,
                    CoherencyPolicy policy, bool trace) const {
    ChipConfig c;
    c.cores = cores;
    c.topology = topo;
    c.hop_latency = hop_latency;
    c.thread_slots = thread_slots;
    c.cache = cache;
    c.hints = hints;
    c.coherency = policy;
    c.watchdog_cycles = watchdog;
    c.trace = trace;
    c.check();
    return c;
  }
};

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::COMPLETED:
      return kExitCompleted;
    case Outcome::DEADLOCK_STARVATION:
    case Outcome::DEADLOCK_DATAFLOW:
    case Outcome::WATCHDOG_TIMEOUT:
      return kExitDeadlock;
    case Outcome::FAULT:
      break;
  }
  return kExitFault;
}

std::string record_text(const RunRecord& r, const std::string& format,
                        bool header) {
  if (format == "json") return to_json(r);
  return (header ? csv_header() : std::string{}) + to_csv(r);
}

Program build(const Workload& w) { return annotate_hints(assemble(w.source)); }

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out,
         std::ostream& err) {
  CLI::App app{"mgsim2: cycle-level Microgrid simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mgsim2 0.1.0");
  app.footer(
      "Exit codes: 0 completed, 2 deadlock or watchdog, 3 fault, 64 usage,\n"
      "1 other errors (assemble and oracle diagnostics, I/O).\n"
      "MGSIM2_SEED is reserved; the simulator is deterministic.");

  std::string format = "csv";
  auto format_check = CLI::IsMember({"csv", "json"});

  // run
  auto* run_cmd = app.add_subcommand("run", "Simulate one configuration");
  std::string program, kernel, trace_path, dump_path;
  int cores = 1;
  std::string topology = "ring", hints = "on", coherency = "bulk";
  ChipFlags run_flags;
  run_cmd->add_option("--program", program, "Assembly source file")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--kernel", kernel, "Built-in kernel name")
      ->check(CLI::IsMember(kernels::names()));
  run_cmd->add_option("--cores", cores, "Number of cores P")
      ->capture_default_str()->check(CLI::PositiveNumber);
  run_cmd->add_option("--topology", topology, "ring | line")
      ->capture_default_str()->check(CLI::IsMember({"ring", "line"}));
  run_cmd->add_option("--hints", hints, "Switch hints on | off")
      ->capture_default_str()->check(CLI::IsMember({"on", "off"}));
  run_cmd->add_option("--coherency", coherency, "eager | bulk")
      ->capture_default_str()->check(CLI::IsMember({"eager", "bulk"}));
  run_cmd->add_option("--trace", trace_path, "Write the commit trace here");
  run_cmd->add_option("--dump-mem", dump_path,
                      "Write the final memory image here");
  run_cmd->add_option("--format", format, "csv | json")
      ->capture_default_str()->check(format_check);
  run_flags.add(*run_cmd);

  // sweep
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Run the cross-product of configurations");
  std::vector<std::string> sweep_kernels, sweep_programs;
  std::vector<int> sweep_cores{1, 2, 4, 8};
  std::vector<std::string> sweep_topologies{"ring"};
  std::vector<std::string> sweep_hints{"on", "off"};
  std::vector<std::string> sweep_coherency{"eager", "bulk"};
  std::string trace_dir;
  ChipFlags sweep_flags;
  sweep_cmd->add_option("--kernel", sweep_kernels, "Built-in kernels")
      ->check(CLI::IsMember(kernels::names()))->delimiter(',');
  sweep_cmd->add_option("--program", sweep_programs, "Assembly files")
      ->check(CLI::ExistingFile)->delimiter(',');
  sweep_cmd->add_option("--cores", sweep_cores, "Core counts")
      ->capture_default_str()->delimiter(',')->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--topology", sweep_topologies, "Topologies")
      ->capture_default_str()->delimiter(',')
      ->check(CLI::IsMember({"ring", "line"}));
  sweep_cmd->add_option("--hints", sweep_hints, "Hint settings")
      ->capture_default_str()->delimiter(',')
      ->check(CLI::IsMember({"on", "off"}));
  sweep_cmd->add_option("--coherency", sweep_coherency, "Coherency policies")
      ->capture_default_str()->delimiter(',')
      ->check(CLI::IsMember({"eager", "bulk"}));
  sweep_cmd->add_option("--trace-dir", trace_dir,
                        "Write one commit trace per cell into this directory");
  sweep_cmd->add_option("--format", format, "csv | json")
      ->capture_default_str()->check(format_check);
  sweep_flags.add(*sweep_cmd);

  // oracle
  auto* oracle_cmd =
      app.add_subcommand("oracle", "Run the sequential reference schedule");
  std::string oracle_program, oracle_kernel, oracle_out, image_format = "text";
  oracle_cmd->add_option("--program", oracle_program, "Assembly source file")
      ->check(CLI::ExistingFile);
  oracle_cmd->add_option("--kernel", oracle_kernel, "Built-in kernel name")
      ->check(CLI::IsMember(kernels::names()));
  oracle_cmd->add_option("--out", oracle_out, "Image file (default stdout)");
  oracle_cmd->add_option("--image-format", image_format, "text | binary")
      ->capture_default_str()->check(CLI::IsMember({"text", "binary"}));

  // assemble
  auto* asm_cmd =
      app.add_subcommand("assemble", "Assemble and print a listing");
  std::string asm_program;
  asm_cmd->add_option("program", asm_program, "Assembly source file")
      ->required()->check(CLI::ExistingFile);

  // gen-kernels
  auto* gen_cmd =
      app.add_subcommand("gen-kernels", "Write the kernel corpus to disk");
  std::string gen_dir = "kernels";
  gen_cmd->add_option("--out", gen_dir, "Output directory")
      ->capture_default_str();
  std::string gen_config;
  gen_cmd
      ->add_option("--config", gen_config,
                   "JSON list of kernels and parameters (default: built-in)")
      ->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run_cmd) {
      auto w = load_workload(program, kernel);
      auto config = run_flags.config(cores, kTopologies.at(topology),
                                     kSwitches.at(hints),
                                     kPolicies.at(coherency),
                                     !trace_path.empty());
      Program p;
      try {
        p = build(w);
      } catch (const AssemblyError& e) {
        err << w.name << ":" << e.line() << ": " << e.what() << '\n';
        return kExitFault;
      }
      auto result = mgsim2::run(config, p);
      if (!trace_path.empty()) write_file(trace_path, format_trace(result.trace));
      if (!dump_path.empty() && result.final_memory) {
        write_file(dump_path, image_to_text(*result.final_memory));
      }
      out << record_text(make_record(config, w.name, w.params, result), format,
                         true);
      if (!result.diagnostic.empty()) err << result.diagnostic << '\n';
      return exit_code(result.outcome);
    }

    if (*sweep_cmd) {
      std::vector<Workload> workloads;
      for (const auto& k : sweep_kernels) workloads.push_back(load_workload("", k));
      for (const auto& f : sweep_programs) workloads.push_back(load_workload(f, ""));
      if (workloads.empty()) throw UsageError("sweep needs --kernel or --program");
      if (!trace_dir.empty()) fs::create_directories(trace_dir);
      bool header = true;
      for (const auto& w : workloads) {
        Program p = build(w);
        for (int c : sweep_cores) {
          for (const auto& t : sweep_topologies) {
            for (const auto& h : sweep_hints) {
              for (const auto& m : sweep_coherency) {
                auto config =
                    sweep_flags.config(c, kTopologies.at(t), kSwitches.at(h),
                                       kPolicies.at(m), !trace_dir.empty());
                auto result = mgsim2::run(config, p);
                if (!trace_dir.empty()) {
                  std::ostringstream name;
                  name << w.name << "_p" << c << '_' << t << "_hints-" << h
                       << '_' << m << ".trace";
                  write_file((fs::path(trace_dir) / name.str()).string(),
                             format_trace(result.trace));
                }
                out << record_text(make_record(config, w.name, w.params, result),
                                   format, header);
                header = false;
              }
            }
          }
        }
      }
      return kExitCompleted;
    }

    if (*oracle_cmd) {
      auto w = load_workload(oracle_program, oracle_kernel);
      auto image = sequential_oracle(build(w)).memory;
      std::string text;
      if (image_format == "binary") {
        auto bytes = image_to_binary(image);
        text.assign(bytes.begin(), bytes.end());
      } else {
        text = image_to_text(image);
      }
      if (oracle_out.empty()) {
        out << text;
      } else {
        write_file(oracle_out, text);
      }
      return kExitCompleted;
    }

    if (*asm_cmd) {
      Program p;
      try {
        p = annotate_hints(assemble(read_file(asm_program)));
      } catch (const AssemblyError& e) {
        err << asm_program << ":" << e.line() << ": " << e.what() << '\n';
        return kExitFailure;
      }
      for (std::size_t pc = 0; pc < p.instructions.size(); ++pc) {
        for (const auto& [name, at] : p.labels) {
          if (at == static_cast<int>(pc)) out << name << ":\n";
        }
        out << "  " << pc << "\t" << disassemble(p.instructions[pc], p) << '\n';
      }
      auto issues = validate(p);
      for (const auto& msg : issues) err << asm_program << ": " << msg << '\n';
      return issues.empty() ? kExitCompleted : kExitFailure;
    }

    if (*gen_cmd) {
      auto specs = gen_config.empty() ? default_generation()
                                      : load_corpus_config(read_file(gen_config));
      kernels::write_corpus(gen_dir, specs);
      for (const auto& k : specs) out << (fs::path(gen_dir) / k.name).string() << ".masm\n";
      return kExitCompleted;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace mgsim2::cli
