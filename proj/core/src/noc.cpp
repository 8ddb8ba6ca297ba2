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

#include "mgsim2/noc.hpp"

#include <algorithm>
#include <cstdlib>

namespace mgsim2 {

bool Topology::adjacent(CoreId a, CoreId b) const {
  if (a == b || a < 0 || b < 0 || a >= cores || b >= cores) return false;
  const int d = std::abs(a - b);
  if (d == 1) return true;
  return kind == TopologyKind::RING && d == cores - 1;
}

std::vector<CoreId> Topology::route(CoreId src, CoreId dst) const {
  std::vector<CoreId> path{src};
  if (src == dst) return path;
  int dir = dst > src ? 1 : -1;
  if (kind == TopologyKind::RING) {
    const int up = ((dst - src) % cores + cores) % cores;
    const int down = cores - up;
    if (up != down) dir = up < down ? 1 : -1;
  }
  CoreId at = src;
  while (at != dst) {
    at = kind == TopologyKind::RING ? ((at + dir) % cores + cores) % cores
                                    : at + dir;
    path.push_back(at);
  }
  return path;
}

int Topology::hops(CoreId src, CoreId dst) const {
  return static_cast<int>(route(src, dst).size()) - 1;
}

Link make_link(CoreId a, CoreId b) { return {std::min(a, b), std::max(a, b)}; }

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::ALLOCATE_REQ: return "ALLOCATE_REQ";
    case MessageKind::ALLOCATE_RSP: return "ALLOCATE_RSP";
    case MessageKind::CREATE: return "CREATE";
    case MessageKind::TERMINATED: return "TERMINATED";
    case MessageKind::SYNC_DONE: return "SYNC_DONE";
    case MessageKind::RELEASE: return "RELEASE";
    case MessageKind::SHARED: return "SHARED";
  }
  return "?";
}

ControlNetwork::ControlNetwork(Topology topology) : topology_(topology) {
  for (CoreId a = 0; a < topology_.cores; ++a) {
    for (CoreId b = a + 1; b < topology_.cores; ++b) {
      if (topology_.adjacent(a, b)) links_[make_link(a, b)] = 0;
    }
  }
}

void ControlNetwork::send(ControlMessage msg) {
  if (msg.src < 0 || msg.src >= topology_.cores || msg.dst < 0 ||
      msg.dst >= topology_.cores) {
    throw SimFault("control message between invalid cores " +
                   std::to_string(msg.src) + " -> " + std::to_string(msg.dst));
  }
  Flight f;
  f.path = topology_.route(msg.src, msg.dst);
  f.next_event = msg.injected_at +
                 (f.path.size() == 1
                      ? 1
                      : static_cast<Cycle>(topology_.hop_latency));
  f.seq = injected_++;
  f.msg = std::move(msg);
  flights_.push_back(std::move(f));
}

std::vector<ControlMessage> ControlNetwork::step(Cycle now) {
  std::vector<std::pair<std::uint64_t, ControlMessage>> arrived;
  std::vector<Flight> remaining;
  remaining.reserve(flights_.size());
  for (auto& f : flights_) {
    bool done = false;
    if (f.next_event <= now) {
      if (f.position + 1 < f.path.size()) {
        const Link link = make_link(f.path[f.position], f.path[f.position + 1]);
        ++links_[link];
        if (f.msg.tag >= 0) ++tagged_[f.msg.tag][link];
        ++f.position;
        f.next_event += static_cast<Cycle>(topology_.hop_latency);
      }
      done = f.position + 1 == f.path.size();
    }
    if (done) {
      arrived.emplace_back(f.seq, std::move(f.msg));
    } else {
      remaining.push_back(std::move(f));
    }
  }
  flights_ = std::move(remaining);
  std::stable_sort(arrived.begin(), arrived.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second.dst != b.second.dst) {
                       return a.second.dst < b.second.dst;
                     }
                     return a.first < b.first;
                   });
  std::vector<ControlMessage> out;
  out.reserve(arrived.size());
  for (auto& [seq, msg] : arrived) out.push_back(std::move(msg));
  delivered_ += out.size();
  return out;
}

std::map<Link, std::uint64_t> ControlNetwork::hop_log() const {
  return links_;
}

std::map<Link, std::uint64_t> ControlNetwork::hop_log(FamilyId tag) const {
  auto it = tagged_.find(tag);
  return it == tagged_.end() ? std::map<Link, std::uint64_t>{} : it->second;
}

std::uint64_t ControlNetwork::total_hops() const {
  std::uint64_t total = 0;
  for (const auto& [link, count] : links_) total += count;
  return total;
}

bool ControlNetwork::in_flight_only(MessageKind a, MessageKind b) const {
  return std::all_of(flights_.begin(), flights_.end(), [&](const Flight& f) {
    return f.msg.kind == a || f.msg.kind == b;
  });
}

}  // namespace mgsim2
