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
#include <utility>
#include <variant>
#include <vector>

#include "mgsim2/types.hpp"

namespace mgsim2 {

enum class TopologyKind { RING, LINE };

struct Topology {
  TopologyKind kind = TopologyKind::RING;
  int cores = 1;
  int hop_latency = 2;

  bool adjacent(CoreId a, CoreId b) const;
  // Minimal-hop core sequence from src to dst, both ends included. On a ring
  // with equal distance both ways the route avoids the wrap-around link,
  // so a route and its reverse use the same links.
  std::vector<CoreId> route(CoreId src, CoreId dst) const;
  int hops(CoreId src, CoreId dst) const;
};

// Undirected link between adjacent cores, stored as (low, high).
using Link = std::pair<CoreId, CoreId>;
Link make_link(CoreId a, CoreId b);

enum class MessageKind {
  ALLOCATE_REQ,
  ALLOCATE_RSP,
  CREATE,
  TERMINATED,
  SYNC_DONE,
  RELEASE,
  SHARED,
};

const char* to_string(MessageKind kind);

struct AllocateReqPayload {
  RegRef reply;
  int size = 1;
  int hint = -1;  // -1 = LOCAL
};
struct AllocateRspPayload {
  RegRef reply;
  AllocId alloc = 0;  // 0 = denied
};
struct CreatePayload {
  FamilyId family = 0;
  std::int64_t first_ordinal = 0;  // position in the family's index sequence
  std::int64_t count = 0;
};
struct TerminatedPayload {
  FamilyId family = 0;
  std::int64_t count = 0;
};
struct SyncDonePayload {
  RegRef target;
};
struct ReleasePayload {
  AllocId alloc = 0;
};
// Shared-channel value travelling to the thread at `ordinal` of `family`;
// ordinal == N denotes the family's outgoing value read by the parent.
struct SharedPayload {
  FamilyId family = 0;
  std::int64_t ordinal = 0;
  Word value = 0;
};

using Payload = std::variant<AllocateReqPayload, AllocateRspPayload,
                             CreatePayload, TerminatedPayload, SyncDonePayload,
                             ReleasePayload, SharedPayload>;

struct ControlMessage {
  MessageKind kind = MessageKind::CREATE;
  CoreId src = 0;
  CoreId dst = 0;
  Payload payload;
  Cycle injected_at = 0;
  // Family the message belongs to, used for per-family traffic audits;
  // -1 for allocation traffic.
  FamilyId tag = -1;
};

class ControlNetwork {
 public:
  explicit ControlNetwork(Topology topology);

  const Topology& topology() const { return topology_; }

  void send(ControlMessage msg);
  // Advance to cycle `now`: perform every hop due at `now` and return the
  // messages arriving, ordered by (dst core, injection order).
  std::vector<ControlMessage> step(Cycle now);

  // Traversal counts for every adjacent link (zero entries included).
  std::map<Link, std::uint64_t> hop_log() const;
  std::map<Link, std::uint64_t> hop_log(FamilyId tag) const;
  std::uint64_t total_hops() const;

  std::uint64_t injected() const { return injected_; }
  std::uint64_t delivered() const { return delivered_; }
  std::size_t in_flight() const { return flights_.size(); }
  bool in_flight_only(MessageKind a, MessageKind b) const;

 private:
  struct Flight {
    ControlMessage msg;
    std::vector<CoreId> path;
    std::size_t position = 0;  // index into path of the current core
    Cycle next_event = 0;
    std::uint64_t seq = 0;
  };

  Topology topology_;
  std::vector<Flight> flights_;
  std::map<Link, std::uint64_t> links_;
  std::map<FamilyId, std::map<Link, std::uint64_t>> tagged_;
  std::uint64_t injected_ = 0;
  std::uint64_t delivered_ = 0;
};

}  // namespace mgsim2
