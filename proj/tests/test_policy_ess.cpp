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

#include <cmath>

#include "doctest.h"
#include "poietic/ess.hpp"
#include "poietic/harness.hpp"
#include "poietic/policy.hpp"
#include "test_support.hpp"

using namespace poietic;
using poietic::testing::A;

namespace {

const CellGeometry kG{};

// A frame of a dims x dims grid where every listed cell is filled with one colour.
Frame grid(std::uint32_t dims, const std::map<Position, std::uint8_t>& colours) {
  Frame f;
  f.geometry = kG;
  f.dims = dims;
  int n = 0;
  for (std::uint32_t r = 0; r < dims; ++r) {
    for (std::uint32_t c = 0; c < dims; ++c) f.membership[A("g" + std::to_string(n++))] = Position{r, c};
  }
  for (const auto& [pos, colour] : colours)
    f.cells[pos] = Cell{CellPayload::filled(kG, colour), A("x"), Stamp{1, 0}};
  return f;
}

std::size_t count_events(const AgentPolicy& policy, double q, std::size_t ticks, std::uint64_t seed) {
  Rng rng(seed);
  const Frame empty = grid(1, {});
  std::size_t n = 0;
  for (std::size_t t = 1; t <= ticks; ++t) {
    n += agent_policy_step(policy, empty, A("a1"), Position{0, 0}, q, rng, kG, t, t).size();
  }
  return n;
}

// Binomial 3-sigma band for n trials at rate r.
bool within_3_sigma(std::size_t k, std::size_t n, double r) {
  const double mean = static_cast<double>(n) * r;
  const double sigma = std::sqrt(static_cast<double>(n) * r * (1.0 - r));
  return std::abs(static_cast<double>(k) - mean) <= 3.0 * sigma + 1e-9;
}

// Evenly spread qualities with y drawn as a binomial rate over `ticks`.
std::vector<EssPoint> fixture(const RateTable& table, std::size_t count, std::size_t ticks, Rng& rng) {
  std::vector<EssPoint> pts;
  for (std::size_t i = 0; i < count; ++i) {
    const double q = static_cast<double>(i) / static_cast<double>(count - 1);
    std::size_t k = 0;
    for (std::size_t t = 0; t < ticks; ++t) k += rng.bernoulli(table.at(q));
    pts.push_back(
        EssPoint{A("a" + std::to_string(i + 1)), q, static_cast<double>(k) / static_cast<double>(ticks)});
  }
  return pts;
}

}  // namespace

TEST_CASE("RandomPainter with p = 0 never emits") {
  CHECK(count_events(RandomPainter{0.0}, 0.7, 1000, 1) == 0);
  CHECK(count_events(RandomPainter{1.0}, 0.0, 50, 1) == 50);
}

TEST_CASE("Signaler with r(q) = q at q = 0.5 emits about 500 of 1000 ticks") {
  const Signaler linear{RateTable::preset("linear"), "linear"};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::size_t k = count_events(linear, 0.5, 1000, seed);
    CHECK(within_3_sigma(k, 1000, 0.5));
  }
}

TEST_CASE("Signaler rates stay within 3 sigma of the table in at least 99 of 100 runs") {
  const Signaler s{};
  for (double q : {0.0, 0.25, 0.5, 0.8, 1.0}) {
    int inside = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
      inside += within_3_sigma(count_events(s, q, 400, seed), 400, s.table.at(q));
    CHECK(inside >= 99);
  }
}

TEST_CASE("Mimic copies the neighbourhood majority with ties to the lowest index") {
  SUBCASE("all neighbours blank paints index 0") {
    const Frame f = grid(3, {});
    Rng rng(1);
    const auto ev = agent_policy_step(Mimic{1.0}, f, A("g4"), Position{1, 1}, 0.5, rng, kG, 1, 1);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].payload == CellPayload::filled(kG, 0));
  }
  SUBCASE("four and four is a tie") {
    const Frame f = grid(3, {{{0, 0}, 5},
                             {{0, 1}, 5},
                             {{0, 2}, 5},
                             {{1, 0}, 5},
                             {{1, 2}, 3},
                             {{2, 0}, 3},
                             {{2, 1}, 3},
                             {{2, 2}, 3}});
    CHECK(neighbour_majority(f, Position{1, 1}, kG) == 3);
  }
  SUBCASE("a clear majority wins and the grid edge is not counted") {
    const Frame f = grid(3, {{{0, 1}, 9}, {{1, 0}, 9}, {{1, 1}, 2}});
    CHECK(neighbour_majority(f, Position{0, 0}, kG) == 9);
  }
  SUBCASE("missing in-grid neighbours count as blank") {
    const Frame f = grid(3, {{{0, 1}, 9}});
    CHECK(neighbour_majority(f, Position{1, 1}, kG) == 0);
  }
}

TEST_CASE("rate table presets and validation") {
  CHECK(RateTable::preset("S-default").at(0.5) == doctest::Approx(0.8));
  CHECK(RateTable::preset("Z-default").at(0.5) == doctest::Approx(0.2));
  CHECK(RateTable::preset("linear").at(0.3) == doctest::Approx(0.3));
  CHECK(RateTable::preset("flat").at(0.9) == doctest::Approx(0.5));
  CHECK(RateTable::preset("S-default").at(-1.0) == doctest::Approx(0.1));
  for (const std::string& name : RateTable::preset_names()) CHECK_NOTHROW(RateTable::preset(name));
  CHECK_THROWS_AS(RateTable::preset("S-double-prime"), Error);
  CHECK_THROWS_AS(RateTable({{0.5, 0.1}, {0.5, 0.2}}), Error);
  CHECK_THROWS_AS(RateTable({{0.0, 1.5}}), Error);
}

TEST_CASE("policies round-trip through their encoding and shorthand") {
  for (const AgentPolicy& p : {AgentPolicy{RandomPainter{0.3}}, AgentPolicy{Mimic{0.7}},
                               AgentPolicy{Signaler{RateTable::preset("Z-default"), "Z-default"}},
                               AgentPolicy{Signaler{RateTable({{0.0, 0.2}, {1.0, 0.6}}), ""}}}) {
    CHECK(decode_policy(encode_policy(p)) == p);
  }
  CHECK(policy_from_string("random_painter:0.3") == AgentPolicy{RandomPainter{0.3}});
  CHECK(policy_from_string("signaler:Z-default") ==
        AgentPolicy{Signaler{RateTable::preset("Z-default"), "Z-default"}});
  CHECK_THROWS_AS(policy_from_string("dancer"), Error);
  CHECK_THROWS_AS(policy_from_string("random_painter:2"), Error);
}

TEST_CASE("classifier labels generated hump, valley and flat fixtures") {
  Rng rng(11);
  CHECK(classify_ess_shape(fixture(RateTable::preset("S-default"), 60, 500, rng)) == ShapeLabel::kS);
  CHECK(classify_ess_shape(fixture(RateTable::preset("S-prime"), 60, 500, rng)) == ShapeLabel::kS);
  CHECK(classify_ess_shape(fixture(RateTable::preset("Z-default"), 60, 500, rng)) == ShapeLabel::kZ);

  std::vector<EssPoint> flat;
  for (int i = 0; i < 40; ++i) flat.push_back(EssPoint{A("f" + std::to_string(i)), i / 39.0, 0.5});
  CHECK(classify_ess_shape(flat) == ShapeLabel::kIndeterminate);

  // Monotone rise: middle band is between the others.
  CHECK(classify_ess_shape(fixture(RateTable::preset("linear"), 60, 2000, rng)) ==
        ShapeLabel::kIndeterminate);
}

TEST_CASE("tertile means follow the q range, not the population") {
  std::vector<EssPoint> pts;
  // 28 points crowded near q = 0 plus two outliers stretching the range.
  for (int i = 0; i < 28; ++i) pts.push_back(EssPoint{A("c" + std::to_string(i)), 0.01 * i / 28.0, 0.1});
  pts.push_back(EssPoint{A("mid"), 0.5, 0.9});
  pts.push_back(EssPoint{A("top"), 1.0, 0.2});
  const TertileMeans m = tertile_means(pts);
  CHECK(m.n1 == 28);
  CHECK(m.n2 == 1);
  CHECK(m.n3 == 1);
  CHECK(m.m2 == doctest::Approx(0.9));
  CHECK(classify_ess_shape(pts) == ShapeLabel::kS);
}

TEST_CASE("classifier needs at least 30 points") {
  std::vector<EssPoint> pts;
  for (int i = 0; i < 29; ++i) pts.push_back(EssPoint{A("p" + std::to_string(i)), i / 28.0, 0.5});
  try {
    classify_ess_shape(pts);
    FAIL("expected insufficient data");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientData);
  }
}

TEST_CASE("ess points CSV round-trips") {
  const std::vector<EssPoint> pts{{A("a1"), 0.25, 0.5}, {A("a2"), 1.0, 0.0}};
  const std::string csv = ess_to_csv(pts);
  CHECK(csv.rfind("agent,q,y\n", 0) == 0);
  CHECK(ess_from_csv(csv) == pts);
  CHECK_THROWS_AS(ess_from_csv("agent,q,y\na1,zero,1\n"), Error);
}

TEST_CASE("ess_points measure events per member tick from a run") {
  ScenarioConfig cfg;
  cfg.duration = 100;
  cfg.drain = 0;
  AgentGroup loud;
  loud.policy = Signaler{RateTable::preset("linear"), "linear"};
  loud.quality = 1.0;
  AgentGroup silent;
  silent.policy = RandomPainter{0.0};
  silent.quality = 0.3;
  AgentGroup late;
  late.policy = RandomPainter{1.0};
  late.join_tick = 51;
  late.leave_tick = 81;
  cfg.agents = {loud, silent, late};
  const RunResult run = run_scenario(cfg);
  REQUIRE(run.ess.size() == 3);
  CHECK(run.ess[0] == EssPoint{A("a1"), 1.0, 1.0});
  CHECK(run.ess[1] == EssPoint{A("a2"), 0.3, 0.0});
  CHECK(run.ess[2].y == doctest::Approx(1.0));
  CHECK(run.metrics.events_sent.at(A("a3")) == 30);
}

TEST_CASE("a mixed roster reproduces the configured rate table within binomial noise") {
  ScenarioConfig cfg;
  cfg.duration = 400;
  cfg.drain = 0;
  AgentGroup g;
  g.count = 30;
  g.policy = Signaler{};
  g.quality = QualitySpread{0.0, 1.0};
  cfg.agents = {g};
  const RunResult run = run_scenario(cfg, RunOptions{7});
  const RateTable table = RateTable::preset("S-default");
  int inside = 0;
  for (const EssPoint& p : run.ess) {
    inside += within_3_sigma(static_cast<std::size_t>(std::lround(p.y * 400)), 400, table.at(p.q));
  }
  CHECK(inside >= 29);
  CHECK(classify_ess_shape(run.ess) == ShapeLabel::kS);
}
