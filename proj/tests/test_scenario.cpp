// Copyright 2026 The Poietic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>

#include "doctest.h"
#include "poietic/scenario.hpp"
#include "test_support.hpp"

using namespace poietic;
using poietic::testing::A;

namespace {

std::vector<std::string> problems_of(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidConfig);
    std::vector<std::string> lines;
    std::string msg = e.what();
    std::size_t at = msg.find('\n');
    while (at != std::string::npos) {
      const std::size_t next = msg.find('\n', at + 1);
      lines.push_back(msg.substr(at + 3, next == std::string::npos ? std::string::npos : next - at - 3));
      at = next;
    }
    return lines;
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  return std::any_of(problems.begin(), problems.end(),
                     [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("a minimal scenario parses with documented defaults") {
  const ScenarioConfig cfg = parse_scenario_text(R"({"schema_version": 1, "agents": [{"count": 4}]})");
  CHECK(cfg.duration == 200);
  CHECK(cfg.topology.kind == TopologyKind::kTP);
  CHECK(cfg.audit.window == 50);
  CHECK(cfg.audit.epsilon == doctest::Approx(0.05));
  CHECK(cfg.audit.theta == doctest::Approx(0.99));
  const auto roster = cfg.roster();
  REQUIRE(roster.size() == 4);
  CHECK(roster.front().id == A("a1"));
  CHECK(roster.back().id == A("a4"));
}

TEST_CASE("every problem is reported at once") {
  const auto problems = problems_of(R"({
    "schema_version": 2,
    "duration": -1,
    "colour": "red",
    "topology": {"kind": "mesh", "fanout": 0},
    "agents": [{"count": 0, "policy": "dancer", "quality": 3},
               {"count": 2, "quality": {"spread": [0.8, 0.2]}, "join_tick": 5, "leave_tick": 5}],
    "noloops": [{"kind": "selective_drop", "target": "zz", "direction": "to-self"}],
    "audit": {"window": 0, "epsilon": 2}
  })");
  CHECK(mentions(problems, "schema_version"));
  CHECK(mentions(problems, "duration"));
  CHECK(mentions(problems, "unknown key 'colour'"));
  CHECK(mentions(problems, "topology.kind"));
  CHECK(mentions(problems, "agents[0].count"));
  CHECK(mentions(problems, "agents[0].policy"));
  CHECK(mentions(problems, "agents[0].quality"));
  CHECK(mentions(problems, "agents[1]"));
  CHECK(mentions(problems, "audit"));
  CHECK(problems.size() >= 9);
}

TEST_CASE("semantic checks on a constructed config") {
  ScenarioConfig cfg;
  cfg.topology = Topology{TopologyKind::kDP, 0};
  AgentGroup g;
  g.count = 3;
  g.policy = RandomPainter{1.5};
  g.join_tick = 500;
  cfg.agents = {g};
  cfg.noloops = {NoloopConfig{SelectiveDrop{A("a9")}, {}, 0},
                 NoloopConfig{LyingFrame{{{A("a1"), CellPayload::filled(CellGeometry{}, 1)}}, {}}, {}, 0}};
  const auto problems = validate_scenario(cfg);
  CHECK(mentions(problems, "topology.fanout"));
  CHECK(mentions(problems, "edit probability"));
  CHECK(mentions(problems, "join_tick"));
  CHECK(mentions(problems, "unknown agent 'a9'"));
  CHECK(mentions(problems, "noloops[1]"));  // vanishing-point lie in DP
  CHECK_THROWS_AS(require_valid(cfg), Error);
}

TEST_CASE("scenario files round-trip through their encoding") {
  ScenarioConfig cfg;
  cfg.session = "roundtrip";
  cfg.topology = Topology{TopologyKind::kDP, 2};
  cfg.peer_graph = PeerGraph::kRing;
  cfg.duration = 80;
  cfg.drain = 30;
  cfg.seed = 99;
  AgentGroup ops;
  ops.count = 2;
  ops.role = Role::kOperator;
  ops.policy = Signaler{RateTable::preset("Z-default"), "Z-default"};
  ops.quality = QualityUniform{0.2, 0.4};
  AgentGroup rest;
  rest.count = 5;
  rest.policy = Mimic{0.25};
  rest.quality = QualitySpread{0.0, 1.0};
  rest.join_tick = 3;
  rest.leave_tick = 60;
  cfg.agents = {ops, rest};
  cfg.noloops = {NoloopConfig{SelectiveDrop{A("a3"), DropDirection::kToOthers, 0.5}, {10, 40}, 7},
                 NoloopConfig{Retain{A("a4"), 3}, {}, 0}};
  cfg.audit.window = 20;

  const nlohmann::json j = encode_scenario(cfg);
  const ScenarioConfig back = parse_scenario(j);
  CHECK(encode_scenario(back) == j);
  CHECK(back.roster().size() == 7);
  CHECK(back.roster()[0].q == cfg.roster()[0].q);
  CHECK(back.roster()[2].q == doctest::Approx(0.0));
  CHECK(back.roster()[6].q == doctest::Approx(1.0));
  CHECK(back.roster()[2].join_tick == 3);
}

TEST_CASE("uniform qualities depend only on the scenario seed") {
  ScenarioConfig cfg;
  AgentGroup g;
  g.count = 10;
  g.quality = QualityUniform{0.0, 1.0};
  cfg.agents = {g};
  cfg.seed = 5;
  const auto first = cfg.roster();
  const auto again = cfg.roster();
  cfg.seed = 6;
  const auto other = cfg.roster();
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].q == again[i].q);
    CHECK(first[i].q >= 0.0);
    CHECK(first[i].q < 1.0);
  }
  CHECK(first[0].q != other[0].q);
}

TEST_CASE("malformed scenario text is a configuration error") {
  CHECK_THROWS_AS(parse_scenario_text("{not json"), Error);
  CHECK_THROWS_AS(parse_scenario_text("[1, 2]"), Error);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), Error);
}
