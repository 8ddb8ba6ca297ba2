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
#include <limits>
#include <random>

#include "doctest.h"
#include "mgsim2/noc.hpp"

using namespace mgsim2;

namespace {

// Floyd-Warshall over the |a-b| == 1 (mod P on a ring) adjacency relation.
std::vector<std::vector<int>> all_pairs(TopologyKind kind, int p) {
  const int inf = std::numeric_limits<int>::max() / 4;
  std::vector<std::vector<int>> d(p, std::vector<int>(p, inf));
  for (int a = 0; a < p; ++a) {
    d[a][a] = 0;
    for (int b = 0; b < p; ++b) {
      const int diff = a > b ? a - b : b - a;
      const bool adj = diff == 1 || (kind == TopologyKind::RING && p > 2 &&
                                     diff == p - 1);
      if (adj) d[a][b] = 1;
    }
  }
  for (int k = 0; k < p; ++k) {
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
      }
    }
  }
  return d;
}

ControlMessage msg(CoreId src, CoreId dst, Cycle at, FamilyId tag = -1) {
  ControlMessage m;
  m.kind = MessageKind::CREATE;
  m.src = src;
  m.dst = dst;
  m.injected_at = at;
  m.tag = tag;
  return m;
}

// Steps the network from `from` through `to`, returning (cycle, message).
std::vector<std::pair<Cycle, ControlMessage>> drain(ControlNetwork& net,
                                                    Cycle from, Cycle to) {
  std::vector<std::pair<Cycle, ControlMessage>> out;
  for (Cycle c = from; c <= to; ++c) {
    for (auto& m : net.step(c)) out.emplace_back(c, m);
  }
  return out;
}

}  // namespace

TEST_CASE("adjacency") {
  Topology ring{TopologyKind::RING, 8, 2};
  CHECK(ring.adjacent(0, 1));
  CHECK(ring.adjacent(7, 0));
  CHECK_FALSE(ring.adjacent(0, 2));
  CHECK_FALSE(ring.adjacent(3, 3));
  Topology line{TopologyKind::LINE, 8, 2};
  CHECK_FALSE(line.adjacent(7, 0));
  CHECK(line.adjacent(6, 7));
}

TEST_CASE("routes are minimal and follow adjacent links") {
  for (auto kind : {TopologyKind::RING, TopologyKind::LINE}) {
    for (int p = 1; p <= 12; ++p) {
      Topology t{kind, p, 2};
      auto dist = all_pairs(kind, p);
      for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
          auto path = t.route(a, b);
          CHECK(t.hops(a, b) == dist[a][b]);
          REQUIRE(path.size() == static_cast<std::size_t>(dist[a][b] + 1));
          CHECK(path.front() == a);
          CHECK(path.back() == b);
          for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            CHECK(t.adjacent(path[i], path[i + 1]));
          }
        }
      }
    }
  }
}

TEST_CASE("ring examples") {
  Topology t{TopologyKind::RING, 8, 2};
  CHECK(t.hops(0, 3) == 3);
  CHECK(t.route(0, 6) == std::vector<CoreId>{0, 7, 6});
  // Equal distance both ways: stay off the wrap-around link.
  CHECK(t.route(0, 4) == std::vector<CoreId>{0, 1, 2, 3, 4});
  CHECK(t.route(4, 0) == std::vector<CoreId>{4, 3, 2, 1, 0});
  CHECK(t.route(6, 2) == std::vector<CoreId>{6, 5, 4, 3, 2});
}

TEST_CASE("routes are symmetric") {
  for (auto kind : {TopologyKind::RING, TopologyKind::LINE}) {
    for (int p = 1; p <= 9; ++p) {
      Topology t{kind, p, 2};
      for (CoreId a = 0; a < p; ++a) {
        for (CoreId b = 0; b < p; ++b) {
          auto fwd = t.route(a, b);
          auto back = t.route(b, a);
          std::reverse(back.begin(), back.end());
          CHECK(fwd == back);
        }
      }
    }
  }
}

TEST_CASE("send and deliver") {
  SUBCASE("src == dst arrives next cycle with no hops") {
    ControlNetwork net({TopologyKind::RING, 8, 2});
    net.send(msg(3, 3, 10));
    CHECK(net.step(10).empty());
    CHECK(net.step(11).size() == 1);
    CHECK(net.total_hops() == 0);
  }
  SUBCASE("0 -> 3 takes 3 hops and 6 cycles") {
    ControlNetwork net({TopologyKind::RING, 8, 2});
    net.send(msg(0, 3, 5));
    auto got = drain(net, 5, 20);
    REQUIRE(got.size() == 1);
    CHECK(got[0].first == 11);
    auto log = net.hop_log();
    CHECK(log.at({0, 1}) == 1);
    CHECK(log.at({1, 2}) == 1);
    CHECK(log.at({2, 3}) == 1);
    CHECK(net.total_hops() == 3);
  }
  SUBCASE("latency scales with hop_latency") {
    ControlNetwork net({TopologyKind::LINE, 8, 5});
    net.send(msg(7, 1, 0));
    auto got = drain(net, 0, 100);
    REQUIRE(got.size() == 1);
    CHECK(got[0].first == 30);
  }
}

TEST_CASE("step order and conservation") {
  SUBCASE("empty network") {
    ControlNetwork net({TopologyKind::RING, 4, 2});
    CHECK(net.step(0).empty());
    for (const auto& [link, n] : net.hop_log()) CHECK(n == 0);
    CHECK(net.hop_log().size() == 4);
  }
  SUBCASE("same-cycle arrivals at one core keep FIFO order") {
    ControlNetwork net({TopologyKind::RING, 4, 2});
    auto a = msg(1, 2, 0, 1);
    auto b = msg(3, 2, 0, 2);
    auto c = msg(1, 2, 0, 3);
    net.send(a);
    net.send(b);
    net.send(c);
    net.send(msg(0, 1, 0, 4));
    auto got = drain(net, 0, 2);
    REQUIRE(got.size() == 4);
    CHECK(got[0].second.dst == 1);
    CHECK(got[1].second.tag == 1);
    CHECK(got[2].second.tag == 2);
    CHECK(got[3].second.tag == 3);
  }
  SUBCASE("100 random messages: none lost, conservation every cycle") {
    std::mt19937 gen(7);
    std::uniform_int_distribution<int> core(0, 7), when(0, 30);
    Topology topo{TopologyKind::RING, 8, 2};
    ControlNetwork net(topo);
    std::vector<ControlMessage> pending;
    for (int i = 0; i < 100; ++i) pending.push_back(msg(core(gen), core(gen), when(gen), i));
    std::stable_sort(pending.begin(), pending.end(),
                     [](const auto& x, const auto& y) {
                       return x.injected_at < y.injected_at;
                     });
    std::uint64_t delivered = 0, expected_hops = 0;
    std::size_t next = 0;
    for (Cycle c = 0; c < 100; ++c) {
      while (next < pending.size() && pending[next].injected_at == c) {
        expected_hops += topo.hops(pending[next].src, pending[next].dst);
        net.send(pending[next++]);
      }
      for (const auto& m : net.step(c)) {
        const Cycle hops = topo.hops(m.src, m.dst);
        CHECK(c == m.injected_at + (hops == 0 ? 1 : hops * 2));
        ++delivered;
      }
      CHECK(net.injected() == net.delivered() + net.in_flight());
    }
    CHECK(delivered == 100);
    CHECK(net.total_hops() == expected_hops);
  }
}

TEST_CASE("per-tag hop logs") {
  ControlNetwork net({TopologyKind::RING, 8, 1});
  net.send(msg(2, 5, 0, 7));
  net.send(msg(0, 1, 0, -1));
  drain(net, 0, 10);
  auto tagged = net.hop_log(7);
  CHECK(tagged.size() == 3);
  CHECK(tagged.at({2, 3}) == 1);
  CHECK(tagged.at({4, 5}) == 1);
  CHECK(net.hop_log(-1).empty());
  CHECK(net.hop_log().at({0, 1}) == 1);
  for (const auto& [link, n] : net.hop_log()) {
    CHECK(net.topology().adjacent(link.first, link.second));
  }
}

TEST_CASE("invalid endpoints fault") {
  ControlNetwork net({TopologyKind::RING, 4, 2});
  CHECK_THROWS_AS(net.send(msg(0, 4, 0)), SimFault);
}
