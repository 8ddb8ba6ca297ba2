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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mgsim2/isa.hpp"
#include "mgsim2/types.hpp"

namespace mgsim2 {

enum class CoherencyPolicy { EAGER, BULK };

struct CacheConfig {
  int line_bytes = 16;
  int dcache_lines = 64;
  int icache_lines = 32;
  int d_miss_latency = 20;
  int i_miss_latency = 10;

  // Throws std::invalid_argument on a malformed configuration.
  void check() const;
};

struct MemoryStats {
  std::uint64_t loads = 0;
  std::uint64_t stores = 0;
  std::uint64_t d_misses = 0;
  std::uint64_t i_misses = 0;
  std::uint64_t propagation_messages = 0;
  std::uint64_t invalidations = 0;
};

struct LoadResult {
  bool hit = false;
  Word value = 0;
  Cycle ready = 0;  // completion cycle for a miss
};

struct Fill {
  RegRef dst;
  Word value = 0;
};

enum class IcacheStatus { RESIDENT, FILL_REQUESTED };

// Per-core L1 I/D caches (tags only, direct mapped) over one shared backing
// store. Values are resolved against the backing store and, under BULK, the
// per-epoch write sets that have not been published yet.
class MemorySystem {
 public:
  MemorySystem(int cores, std::size_t size_bytes, CacheConfig cache,
               CoherencyPolicy policy);

  CoherencyPolicy policy() const { return policy_; }
  const CacheConfig& cache_config() const { return cache_; }
  std::size_t size_bytes() const { return backing_.size() * 4; }

  void initialize(std::span<const DataWord> data);

  LoadResult load(CoreId core, Word addr, FamilyId epoch, RegRef dst,
                  Cycle now);
  void store(CoreId core, Word addr, Word value, FamilyId epoch);

  void open_epoch(FamilyId epoch);
  // Publishes the epoch's write set; returns the propagation messages it
  // cost (one per dirty line per writing core).
  std::uint64_t flush_epoch(FamilyId epoch);
  void close_epoch(FamilyId epoch);
  bool epoch_open(FamilyId epoch) const;
  std::size_t write_set_size(FamilyId epoch) const;
  std::size_t dirty_lines(FamilyId epoch) const;

  IcacheStatus icache_probe(CoreId core, int pc, Cycle now);
  bool icache_resident(CoreId core, int pc) const;
  bool dcache_resident(CoreId core, Word addr) const;
  std::uint64_t icache_fill_requests() const { return i_fill_requests_; }

  // Data fills completing at `now`, in issue order; installs due lines.
  std::vector<Fill> tick(Cycle now);
  bool busy() const { return !pending_.empty() || !i_pending_.empty(); }

  const MemoryStats& stats() const { return stats_; }
  const std::vector<Word>& image() const { return backing_; }

 private:
  struct Pending {
    Cycle ready;
    std::uint64_t seq;
    CoreId core;
    std::uint64_t line;
    Fill fill;
  };
  struct Tags {
    std::vector<std::int64_t> lines;
  };

  void check_address(CoreId core, Word addr) const;
  std::uint64_t line_of(Word addr) const { return addr / cache_.line_bytes; }
  bool has_line(const Tags& tags, std::uint64_t line) const;
  void install(Tags& tags, std::uint64_t line);
  void invalidate(Tags& tags, std::uint64_t line);

  CacheConfig cache_;
  CoherencyPolicy policy_;
  std::vector<Word> backing_;
  std::vector<Tags> dtags_;
  std::vector<Tags> itags_;
  std::vector<Pending> pending_;
  std::map<std::pair<CoreId, std::uint64_t>, Cycle> d_inflight_;
  std::map<std::pair<CoreId, std::uint64_t>, Cycle> i_pending_;
  // epoch -> core -> address -> value
  std::map<FamilyId, std::map<CoreId, std::map<Word, Word>>> write_sets_;
  std::map<FamilyId, bool> epochs_;  // true while open
  MemoryStats stats_;
  std::uint64_t seq_ = 0;
  std::uint64_t i_fill_requests_ = 0;
};

// Memory image formats: flat little-endian words, and `0xADDR=value` lines
// listing the nonzero words.
std::string image_to_text(std::span<const Word> image);
std::vector<Word> image_from_text(std::string_view text, std::size_t words);
std::vector<std::uint8_t> image_to_binary(std::span<const Word> image);
std::vector<Word> image_from_binary(std::span<const std::uint8_t> bytes);
std::uint64_t image_hash(std::span<const Word> image);

}  // namespace mgsim2
