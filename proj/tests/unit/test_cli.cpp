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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "mgsim2/kernels.hpp"
#include "mgsim2/memory.hpp"
#include "mgsim2/records.hpp"

namespace fs = std::filesystem;
using namespace mgsim2;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::main(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("mgsim2_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("run with defaults prints one record") {
  auto r = cli_run({"run", "--kernel", "regular"});
  CHECK(r.code == cli::kExitCompleted);
  auto l = lines(r.out);
  REQUIRE(l.size() == 2);
  CHECK(l[0] + "\n" == csv_header());
  CHECK(l[0].find("utilization") != std::string::npos);
  CHECK(l[1].find(",COMPLETED,") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(cli_run({"run", "--kernel", "starvation", "--cores", "2"}).code ==
        cli::kExitDeadlock);
  CHECK(cli_run({"run", "--kernel", "channel_cycle"}).code == cli::kExitDeadlock);
  CHECK(cli_run({"run", "--program", "/nonexistent/x.masm"}).code ==
        cli::kExitUsage);
  CHECK(cli_run({"run"}).code == cli::kExitUsage);
  CHECK(cli_run({"run", "--kernel", "regular", "--cores", "0"}).code ==
        cli::kExitUsage);
  CHECK(cli_run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(cli_run({"--help"}).code == 0);

  auto dir = scratch("codes");
  write(dir / "bad.masm", "frob r1\n");
  auto bad = cli_run({"run", "--program", (dir / "bad.masm").string()});
  CHECK(bad.code == cli::kExitFault);
  CHECK_FALSE(bad.err.empty());
  write(dir / "fault.masm", "ld r1, 1(r0)\nhalt\n");
  CHECK(cli_run({"run", "--program", (dir / "fault.masm").string()}).code ==
        cli::kExitFault);
  write(dir / "spin.masm", "top: jmp top\n");
  CHECK(cli_run({"run", "--program", (dir / "spin.masm").string(), "--watchdog",
                 "200"})
            .code == cli::kExitDeadlock);
  fs::remove_all(dir);
}

TEST_CASE("sweep covers the cross product and is reproducible") {
  std::vector<std::string> args = {"sweep",   "--kernel", "regular", "chain",
                                   "--cores", "1",        "4"};
  auto a = cli_run(args);
  auto b = cli_run(args);
  CHECK(a.code == 0);
  auto l = lines(a.out);
  REQUIRE(l.size() == 17);
  CHECK(l[0] + "\n" == csv_header());
  CHECK(a.out == b.out);
  std::set<std::string> distinct(l.begin() + 1, l.end());
  CHECK(distinct.size() == 16);
}

TEST_CASE("sweep traces are reproducible") {
  auto d1 = scratch("t1");
  auto d2 = scratch("t2");
  auto args = [](const fs::path& d) {
    return std::vector<std::string>{"sweep",  "--kernel", "chain",  "--cores",
                                    "2",      "--hints",  "on",     "--coherency",
                                    "bulk",   "--trace-dir", d.string()};
  };
  REQUIRE(cli_run(args(d1)).code == 0);
  REQUIRE(cli_run(args(d2)).code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(d1)) {
    ++files;
    CHECK(slurp(e.path()) == slurp(d2 / e.path().filename()));
    CHECK_FALSE(slurp(e.path()).empty());
  }
  CHECK(files == 1);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("json format") {
  auto r = cli_run({"run", "--kernel", "chain", "--format", "json"});
  CHECK(r.code == 0);
  CHECK(r.out.front() == '{');
  CHECK(lines(r.out).size() == 1);
}

TEST_CASE("oracle images") {
  auto dir = scratch("oracle");
  write(dir / "reg.masm", kernels::regular(4, 2, 1, {0, 1, 2, 3}).source);
  auto reg = cli_run({"oracle", "--program", (dir / "reg.masm").string()});
  REQUIRE(reg.code == 0);
  auto image = image_from_text(reg.out, (1u << 20) / 4);
  for (Word i = 0; i < 4; ++i) CHECK(image[kernels::kOutputBase / 4 + i] == 2 * i + 1);

  write(dir / "chain.masm", kernels::chain(4).source);
  auto ch = cli_run({"oracle", "--program", (dir / "chain.masm").string()});
  REQUIRE(ch.code == 0);
  CHECK(image_from_text(ch.out, (1u << 20) / 4)[kernels::kResultAddr / 4] == 6);

  auto bin = dir / "chain.bin";
  REQUIRE(cli_run({"oracle", "--program", (dir / "chain.masm").string(),
                   "--image-format", "binary", "--out", bin.string()})
              .code == 0);
  auto bytes = slurp(bin);
  auto from_bin = image_from_binary(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  CHECK(from_bin == kernels::chain(4).expected);
  CHECK(cli_run({"oracle", "--kernel", "channel_cycle"}).code != 0);
  fs::remove_all(dir);
}

TEST_CASE("dump-mem agrees with the oracle") {
  auto dir = scratch("dump");
  auto mem = dir / "mem.txt";
  REQUIRE(cli_run({"run", "--kernel", "heterogeneous", "--cores", "4",
                   "--dump-mem", mem.string()})
              .code == 0);
  auto o = cli_run({"oracle", "--kernel", "heterogeneous"});
  REQUIRE(o.code == 0);
  CHECK(slurp(mem) == o.out);
  fs::remove_all(dir);
}

TEST_CASE("gen-kernels regenerates matching images") {
  auto dir = scratch("gen");
  REQUIRE(cli_run({"gen-kernels", "--out", dir.string()}).code == 0);
  for (const auto& k : kernels::corpus()) {
    CAPTURE(k.name);
    auto src = dir / (k.name + ".masm");
    REQUIRE(fs::exists(src));
    if (k.expected.empty()) continue;
    auto o = cli_run({"oracle", "--program", src.string()});
    REQUIRE(o.code == 0);
    CHECK(o.out == slurp(dir / (k.name + ".expected")));
  }
  fs::remove_all(dir);
}

TEST_CASE("assemble lists or diagnoses") {
  auto dir = scratch("asm");
  write(dir / "ok.masm", "addi r1, r0, 1\nld r2, 0(r1)\nadd r3, r2, r1\nhalt\n");
  auto ok = cli_run({"assemble", (dir / "ok.masm").string()});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("halt") != std::string::npos);
  write(dir / "bad.masm", "add r1, r2\n");
  auto bad = cli_run({"assemble", (dir / "bad.masm").string()});
  CHECK(bad.code == cli::kExitFailure);
  CHECK(bad.err.find("1") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("frozen corpus regenerates from its config") {
  const fs::path frozen = MGSIM2_KERNELS_DIR;
  auto dir = scratch("regen");
  REQUIRE(cli_run({"gen-kernels", "--config", (frozen / "corpus.json").string(),
                   "--out", dir.string()})
              .code == 0);
  std::size_t masm = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    CAPTURE(e.path().filename().string());
    CHECK(slurp(e.path()) == slurp(frozen / e.path().filename()));
    if (e.path().extension() != ".masm") continue;
    ++masm;
    auto expected = frozen / e.path().filename().replace_extension(".expected");
    if (!fs::exists(expected)) continue;
    auto o = cli_run({"oracle", "--program", (frozen / e.path().filename()).string()});
    REQUIRE(o.code == 0);
    CHECK(o.out == slurp(expected));
  }
  CHECK(masm == 8);
  fs::remove_all(dir);
}

TEST_CASE("corpus config errors are usage errors") {
  auto dir = scratch("badcfg");
  write(dir / "a.json", R"({"kernels": [{"name": "chain", "params": {"m": 1}}]})");
  write(dir / "b.json", R"({"kernels": [{"name": "nosuch"}]})");
  write(dir / "c.json", "{not json");
  for (const char* f : {"a.json", "b.json", "c.json"}) {
    CAPTURE(f);
    CHECK(cli_run({"gen-kernels", "--config", (dir / f).string(), "--out",
                   (dir / "out").string()})
              .code == cli::kExitUsage);
  }
  fs::remove_all(dir);
}

TEST_CASE("chain sweep over P=1..8 keeps the memory hash") {
  auto r = cli_run({"sweep", "--kernel", "chain", "--cores", "1", "2", "3", "4",
                    "5", "6", "7", "8", "--hints", "on", "--coherency", "bulk"});
  REQUIRE(r.code == 0);
  auto l = lines(r.out);
  REQUIRE(l.size() == 9);
  std::set<std::string> hashes;
  for (std::size_t i = 1; i < l.size(); ++i) hashes.insert(l[i].substr(l[i].rfind(',') + 1));
  CHECK(hashes.size() == 1);
  CHECK_FALSE(hashes.begin()->empty());
}
