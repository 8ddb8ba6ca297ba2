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

#include "mgsim2/memory.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mgsim2 {

void CacheConfig::check() const {
  if (line_bytes < 4 || (line_bytes & (line_bytes - 1)) != 0) {
    throw std::invalid_argument("line_bytes must be a power of two >= 4");
  }
  if (dcache_lines <= 0 || icache_lines <= 0 || d_miss_latency <= 0 ||
      i_miss_latency <= 0) {
    throw std::invalid_argument("cache parameters must be positive");
  }
}

MemorySystem::MemorySystem(int cores, std::size_t size_bytes,
                           CacheConfig cache, CoherencyPolicy policy)
    : cache_(cache), policy_(policy), backing_(size_bytes / 4, 0) {
  cache_.check();
  if (size_bytes == 0 || size_bytes % cache_.line_bytes != 0) {
    throw std::invalid_argument("memory size must be a multiple of line_bytes");
  }
  dtags_.resize(cores, Tags{std::vector<std::int64_t>(cache_.dcache_lines, -1)});
  itags_.resize(cores, Tags{std::vector<std::int64_t>(cache_.icache_lines, -1)});
}

void MemorySystem::initialize(std::span<const DataWord> data) {
  for (const auto& d : data) {
    check_address(0, d.addr);
    backing_[d.addr / 4] = d.value;
  }
}

void MemorySystem::check_address(CoreId core, Word addr) const {
  if (addr % 4 != 0 || static_cast<std::size_t>(addr) / 4 >= backing_.size()) {
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "memory fault: %s address 0x%08x on core %d",
                  addr % 4 != 0 ? "unaligned" : "out-of-bounds", addr, core);
    throw SimFault(buf);
  }
}

bool MemorySystem::has_line(const Tags& tags, std::uint64_t line) const {
  return tags.lines[line % tags.lines.size()] ==
         static_cast<std::int64_t>(line);
}

void MemorySystem::install(Tags& tags, std::uint64_t line) {
  tags.lines[line % tags.lines.size()] = static_cast<std::int64_t>(line);
}

void MemorySystem::invalidate(Tags& tags, std::uint64_t line) {
  auto& slot = tags.lines[line % tags.lines.size()];
  if (slot == static_cast<std::int64_t>(line)) slot = -1;
}

LoadResult MemorySystem::load(CoreId core, Word addr, FamilyId epoch,
                              RegRef dst, Cycle now) {
  check_address(core, addr);
  ++stats_.loads;
  Word value = backing_[addr / 4];
  if (policy_ == CoherencyPolicy::BULK) {
    if (auto e = write_sets_.find(epoch); e != write_sets_.end()) {
      if (auto c = e->second.find(core); c != e->second.end()) {
        if (auto a = c->second.find(addr); a != c->second.end()) {
          value = a->second;
        }
      }
    }
  }
  const auto line = line_of(addr);
  if (has_line(dtags_[core], line)) return {true, value, now};

  Cycle ready = now + static_cast<Cycle>(cache_.d_miss_latency);
  auto key = std::make_pair(core, line);
  if (auto it = d_inflight_.find(key); it != d_inflight_.end()) {
    ready = it->second;
  } else {
    ++stats_.d_misses;
    d_inflight_[key] = ready;
  }
  pending_.push_back({ready, seq_++, core, line, Fill{dst, value}});
  return {false, value, ready};
}

void MemorySystem::store(CoreId core, Word addr, Word value, FamilyId epoch) {
  check_address(core, addr);
  ++stats_.stores;
  if (policy_ == CoherencyPolicy::EAGER) {
    backing_[addr / 4] = value;
    ++stats_.propagation_messages;
    const auto line = line_of(addr);
    for (CoreId other = 0; other < static_cast<CoreId>(dtags_.size());
         ++other) {
      if (other != core && has_line(dtags_[other], line)) {
        invalidate(dtags_[other], line);
        ++stats_.propagation_messages;
        ++stats_.invalidations;
      }
    }
    return;
  }
  auto it = epochs_.find(epoch);
  if (it == epochs_.end() || !it->second) {
    throw SimFault("store in unknown coherency epoch " + std::to_string(epoch));
  }
  write_sets_[epoch][core][addr] = value;
}

void MemorySystem::open_epoch(FamilyId epoch) {
  if (epochs_.count(epoch)) {
    throw SimFault("coherency epoch " + std::to_string(epoch) +
                   " opened twice");
  }
  epochs_[epoch] = true;
}

bool MemorySystem::epoch_open(FamilyId epoch) const {
  auto it = epochs_.find(epoch);
  return it != epochs_.end() && it->second;
}

std::uint64_t MemorySystem::flush_epoch(FamilyId epoch) {
  if (!epoch_open(epoch)) {
    throw SimFault("flush of unknown coherency epoch " +
                   std::to_string(epoch));
  }
  auto e = write_sets_.find(epoch);
  if (e == write_sets_.end()) return 0;
  std::uint64_t messages = 0;
  for (const auto& [core, writes] : e->second) {
    std::set<std::uint64_t> lines;
    for (const auto& [addr, value] : writes) {
      backing_[addr / 4] = value;
      lines.insert(line_of(addr));
    }
    messages += lines.size();
    // The published line doubles as the invalidation for remote copies.
    for (auto line : lines) {
      for (CoreId other = 0; other < static_cast<CoreId>(dtags_.size());
           ++other) {
        if (other != core) invalidate(dtags_[other], line);
      }
    }
  }
  write_sets_.erase(e);
  stats_.propagation_messages += messages;
  return messages;
}

void MemorySystem::close_epoch(FamilyId epoch) {
  if (!epoch_open(epoch)) {
    throw SimFault("close of unknown coherency epoch " +
                   std::to_string(epoch));
  }
  if (write_sets_.count(epoch)) {
    throw SimFault("coherency epoch " + std::to_string(epoch) +
                   " closed with unpublished stores");
  }
  epochs_[epoch] = false;
}

std::size_t MemorySystem::write_set_size(FamilyId epoch) const {
  auto e = write_sets_.find(epoch);
  if (e == write_sets_.end()) return 0;
  std::size_t n = 0;
  for (const auto& [core, writes] : e->second) n += writes.size();
  return n;
}

std::size_t MemorySystem::dirty_lines(FamilyId epoch) const {
  auto e = write_sets_.find(epoch);
  if (e == write_sets_.end()) return 0;
  std::size_t n = 0;
  for (const auto& [core, writes] : e->second) {
    std::set<std::uint64_t> lines;
    for (const auto& [addr, value] : writes) lines.insert(line_of(addr));
    n += lines.size();
  }
  return n;
}

IcacheStatus MemorySystem::icache_probe(CoreId core, int pc, Cycle now) {
  const auto line = line_of(static_cast<Word>(pc) * 4);
  if (has_line(itags_[core], line)) return IcacheStatus::RESIDENT;
  auto key = std::make_pair(core, line);
  if (!i_pending_.count(key)) {
    i_pending_[key] = now + static_cast<Cycle>(cache_.i_miss_latency);
    ++stats_.i_misses;
    ++i_fill_requests_;
  }
  return IcacheStatus::FILL_REQUESTED;
}

bool MemorySystem::icache_resident(CoreId core, int pc) const {
  return has_line(itags_[core], line_of(static_cast<Word>(pc) * 4));
}

bool MemorySystem::dcache_resident(CoreId core, Word addr) const {
  return has_line(dtags_[core], line_of(addr));
}

std::vector<Fill> MemorySystem::tick(Cycle now) {
  for (auto it = i_pending_.begin(); it != i_pending_.end();) {
    if (it->second <= now) {
      install(itags_[it->first.first], it->first.second);
      it = i_pending_.erase(it);
    } else {
      ++it;
    }
  }
  std::vector<Fill> out;
  std::vector<Pending> keep;
  std::vector<Pending> due;
  for (auto& p : pending_) {
    (p.ready <= now ? due : keep).push_back(p);
  }
  std::sort(due.begin(), due.end(), [](const Pending& a, const Pending& b) {
    return a.ready != b.ready ? a.ready < b.ready : a.seq < b.seq;
  });
  for (const auto& p : due) {
    install(dtags_[p.core], p.line);
    d_inflight_.erase({p.core, p.line});
    out.push_back(p.fill);
  }
  pending_ = std::move(keep);
  return out;
}

std::string image_to_text(std::span<const Word> image) {
  std::ostringstream os;
  char buf[48];
  for (std::size_t i = 0; i < image.size(); ++i) {
    if (image[i] == 0) continue;
    std::snprintf(buf, sizeof buf, "0x%08zx=%u\n", i * 4, image[i]);
    os << buf;
  }
  return os.str();
}

std::vector<Word> image_from_text(std::string_view text, std::size_t words) {
  std::vector<Word> image(words, 0);
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("image line " + std::to_string(line_no) +
                                  ": expected addr=value");
    }
    std::size_t used = 0;
    unsigned long long addr = 0, value = 0;
    try {
      addr = std::stoull(line.substr(0, eq), &used, 0);
      value = std::stoull(line.substr(eq + 1), nullptr, 0);
    } catch (const std::exception&) {
      throw std::invalid_argument("image line " + std::to_string(line_no) +
                                  ": malformed number");
    }
    if (addr % 4 != 0 || addr / 4 >= words || value > UINT32_MAX) {
      throw std::invalid_argument("image line " + std::to_string(line_no) +
                                  ": address or value out of range");
    }
    image[addr / 4] = static_cast<Word>(value);
  }
  return image;
}

std::vector<std::uint8_t> image_to_binary(std::span<const Word> image) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(image.size() * 4);
  for (Word w : image) {
    for (int b = 0; b < 4; ++b) {
      bytes.push_back(static_cast<std::uint8_t>(w >> (8 * b)));
    }
  }
  return bytes;
}

std::vector<Word> image_from_binary(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 4 != 0) {
    throw std::invalid_argument("binary image size is not a multiple of 4");
  }
  std::vector<Word> image(bytes.size() / 4);
  for (std::size_t i = 0; i < image.size(); ++i) {
    image[i] = static_cast<Word>(bytes[4 * i]) |
               static_cast<Word>(bytes[4 * i + 1]) << 8 |
               static_cast<Word>(bytes[4 * i + 2]) << 16 |
               static_cast<Word>(bytes[4 * i + 3]) << 24;
  }
  return image;
}

std::uint64_t image_hash(std::span<const Word> image) {
  // FNV-1a over the little-endian bytes.
  std::uint64_t h = 1469598103934665603ull;
  for (Word w : image) {
    for (int b = 0; b < 4; ++b) {
      h ^= static_cast<std::uint8_t>(w >> (8 * b));
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace mgsim2
