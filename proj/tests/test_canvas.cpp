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
#include <numeric>

#include "doctest.h"
#include "poietic/canvas.hpp"
#include "poietic/codec.hpp"
#include "poietic/rng.hpp"
#include "test_support.hpp"

using namespace poietic;
using poietic::testing::A;
using poietic::testing::random_payload;

namespace {

// Row-major scan of a side x side grid for the first position not in `taken`.
Position first_free_oracle(std::uint32_t side, const std::vector<Position>& taken) {
  for (std::uint32_t r = 0; r < side; ++r) {
    for (std::uint32_t c = 0; c < side; ++c) {
      if (std::find(taken.begin(), taken.end(), Position{r, c}) == taken.end()) return {r, c};
    }
  }
  FAIL("grid full");
  return {};
}

Canvas canvas_with(int n) {
  Canvas c;
  for (int i = 1; i <= n; ++i) c.add_member(A("a" + std::to_string(i)));
  return c;
}

Event ev(const std::string& agent, Tick tick, Seq seq, std::uint8_t color) {
  return Event{A(agent), tick, seq, CellPayload::filled(CellGeometry{}, color)};
}

}  // namespace

TEST_CASE("assign_position fills row-major and grows the square on demand") {
  Canvas empty;
  Canvas one = assign_position(empty, A("a1"));
  CHECK(one.position_of(A("a1")) == Position{0, 0});
  CHECK(one.dims() == 1);

  Canvas four = canvas_with(4);
  REQUIRE(four.dims() == 2);
  std::vector<Position> taken;
  for (const auto& [_, p] : four.membership()) taken.push_back(p);
  const Position expected = first_free_oracle(3, taken);
  CHECK(expected == Position{0, 2});

  Canvas five = assign_position(four, A("a5"));
  CHECK(five.dims() == 3);
  CHECK(five.position_of(A("a5")) == expected);
  for (const auto& [agent, pos] : four.membership()) CHECK(five.position_of(agent) == pos);

  CHECK_THROWS_AS(assign_position(one, A("a1")), Error);
}

TEST_CASE("grid invariant holds while filling up to 50 members") {
  Canvas c;
  for (int i = 0; i < 50; ++i) {
    c.add_member(A("m" + std::to_string(i)));
    CHECK(std::size_t{c.dims()} * c.dims() >= c.membership().size());
    CHECK((c.dims() - 1) * (c.dims() - 1) < c.membership().size());
  }
}

TEST_CASE("a freed slot is reused by the next joiner and the old payload persists") {
  Canvas c = canvas_with(3);
  const Position p2 = *c.position_of(A("a2"));
  c.apply(ev("a2", 1, 0, 7));
  c.remove_member(A("a2"), 2);
  CHECK(c.cells().at(p2).payload == CellPayload::filled(CellGeometry{}, 7));
  CHECK(c.add_member(A("a9")) == p2);
  CHECK(c.cells().at(p2).owner == A("a2"));
  c.apply(ev("a9", 3, 0, 4));
  CHECK(c.cells().at(p2).owner == A("a9"));
}

TEST_CASE("events sent before a leave still merge; later ones are rejected") {
  Canvas c = canvas_with(2);
  c.remove_member(A("a1"), 10);
  CHECK(c.admits(ev("a1", 9, 3, 1)));
  CHECK_NOTHROW(c.apply(ev("a1", 9, 3, 1)));
  CHECK_FALSE(c.admits(ev("a1", 10, 4, 1)));
  CHECK_THROWS_AS(c.apply(ev("a1", 11, 4, 1)), Error);
}

TEST_CASE("a late pre-leave event merges after its slot is reassigned, in either order") {
  Canvas base = canvas_with(2);
  const Position p1 = *base.position_of(A("a1"));
  base.remove_member(A("a1"), 5);
  REQUIRE(base.add_member(A("a3")) == p1);
  const Event late = ev("a1", 4, 1, 2);
  const Event fresh = ev("a3", 6, 1, 9);
  CHECK(base.admits(late));

  Canvas x = apply_event(apply_event(base, late), fresh);
  Canvas y = apply_event(apply_event(base, fresh), late);
  CHECK(x == y);
  CHECK(x.cells().at(p1).owner == A("a3"));
}

TEST_CASE("apply_event is last-writer-wins on (tick, seq)") {
  Canvas c = canvas_with(1);
  const Position p = *c.position_of(A("a1"));

  c = apply_event(c, ev("a1", 1, 0, 3));
  CHECK(c.cells().at(p).stamp == Stamp{1, 0});
  CHECK(c.cells().at(p).payload == CellPayload::filled(CellGeometry{}, 3));

  c = apply_event(c, ev("a1", 2, 5, 4));
  const Canvas before = c;
  c = apply_event(c, ev("a1", 2, 3, 9));
  CHECK(c == before);

  // (3,0) > (2,5) lexicographically even though 0 < 5.
  CHECK(Stamp{3, 0} > Stamp{2, 5});
  c = apply_event(c, ev("a1", 3, 0, 9));
  CHECK(c.cells().at(p).stamp == Stamp{3, 0});

  CHECK_THROWS_AS(apply_event(c, ev("zz", 1, 0, 1)), Error);
  Event bad = ev("a1", 9, 9, 1);
  bad.payload.pixels()[5] = 16;
  CHECK_THROWS_AS(apply_event(c, bad), Error);
}

TEST_CASE("merge_events: empty set is the identity") {
  Canvas c = canvas_with(2);
  c.apply(ev("a1", 1, 0, 2));
  CHECK(merge_events(c, {}) == c);
}

TEST_CASE("merge_events: three events of one agent, all 6 orders show seq 2") {
  const Canvas base = canvas_with(1);
  std::vector<Event> events{ev("a1", 1, 0, 1), ev("a1", 1, 1, 2), ev("a1", 1, 2, 3)};
  std::vector<int> order{0, 1, 2};
  int orders = 0;
  do {
    std::vector<Event> shuffled;
    for (int i : order) shuffled.push_back(events[i]);
    Canvas c = merge_events(base, shuffled);
    CHECK(c.cells().at({0, 0}).payload == events[2].payload);
    ++orders;
  } while (std::next_permutation(order.begin(), order.end()));
  CHECK(orders == 6);
}

TEST_CASE("merge_events: five events over three agents agree across all 120 orders") {
  const Canvas base = canvas_with(3);
  std::vector<Event> events{ev("a1", 1, 0, 1), ev("a2", 1, 0, 2), ev("a1", 2, 1, 3), ev("a3", 2, 0, 4),
                            ev("a2", 4, 1, 5)};
  std::vector<int> order(5);
  std::iota(order.begin(), order.end(), 0);
  const auto reference = serialize(merge_events(base, events));
  int orders = 0;
  do {
    std::vector<Event> shuffled;
    for (int i : order) shuffled.push_back(events[i]);
    CHECK(serialize(merge_events(base, shuffled)) == reference);
    ++orders;
  } while (std::next_permutation(order.begin(), order.end()));
  CHECK(orders == 120);
}

TEST_CASE("property: merge confluence, idempotence and exclusive ownership") {
  Rng rng(42);
  const CellGeometry g{};
  for (int trial = 0; trial < 60; ++trial) {
    const int agents = 1 + static_cast<int>(rng.below(4));
    const Canvas base = canvas_with(agents);
    const std::size_t n = 1 + rng.below(5);
    std::vector<Event> events;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string who = "a" + std::to_string(1 + rng.below(agents));
      // Small tick/seq ranges force stamp collisions, including forged
      // duplicates with equal stamps and different payloads.
      events.push_back(Event{A(who), rng.below(3), rng.below(3), random_payload(g, rng)});
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto reference = serialize(merge_events(base, events));
    do {
      std::vector<Event> shuffled;
      for (auto i : order) shuffled.push_back(events[i]);
      REQUIRE(serialize(merge_events(base, shuffled)) == reference);
    } while (std::next_permutation(order.begin(), order.end()));

    for (const Event& e : events) {
      Canvas once = apply_event(base, e);
      CHECK(apply_event(once, e) == once);
      const Frame before = render_frame(base, 0);
      const Frame after = render_frame(once, 0);
      const FrameDiff d = diff_frames(before, after);
      CHECK(d.size() == 1);
      CHECK(d.begin()->first == *base.position_of(e.agent));
    }
  }
}

TEST_CASE("render_frame is a detached snapshot") {
  Canvas c = canvas_with(2);
  CHECK(render_frame(Canvas{}, 0).cells.empty());

  c.apply(ev("a1", 1, 0, 5));
  const Frame first = render_frame(c, 1);
  CHECK(first.cell_at({0, 0})->payload == CellPayload::filled(CellGeometry{}, 5));

  c.apply(ev("a2", 2, 0, 6));
  const Frame second = render_frame(c, 2);
  CHECK(first.cells.size() == 1);
  const FrameDiff d = diff_frames(first, second);
  REQUIRE(d.size() == 1);
  CHECK(d.begin()->first == *c.position_of(A("a2")));
}

TEST_CASE("diff_frames is minimal and patches round-trip") {
  Rng rng(7);
  const CellGeometry g{};
  Canvas c = canvas_with(9);
  Frame f = render_frame(c, 0);
  CHECK(diff_frames(f, f).empty());
  CHECK(make_patch(f, f).cells.empty());

  Tick tick = 1;
  for (int step = 0; step < 200; ++step) {
    const Frame a = render_frame(c, tick);
    const int edits = static_cast<int>(rng.below(4));
    for (int i = 0; i < edits; ++i) {
      const std::string who = "a" + std::to_string(1 + rng.below(9));
      c.apply(Event{A(who), tick, static_cast<Seq>(step * 4 + i), random_payload(g, rng)});
    }
    if (rng.bernoulli(0.05)) c.add_member(A("late" + std::to_string(step)));
    ++tick;
    const Frame b = render_frame(c, tick);
    const FrameDiff d = diff_frames(a, b);
    CHECK(d.size() <= static_cast<std::size_t>(edits));
    CHECK(apply_diff(a, d).cells == b.cells);
    CHECK(apply_patch(a, make_patch(a, b)) == b);
    CHECK(d.empty() == (a.cells == b.cells));
  }
}

TEST_CASE("identical state serializes to identical bytes") {
  Canvas x = canvas_with(3);
  Canvas y = canvas_with(3);
  x.apply(ev("a1", 1, 0, 1));
  x.apply(ev("a3", 1, 0, 2));
  y.apply(ev("a3", 1, 0, 2));
  y.apply(ev("a1", 1, 0, 1));
  CHECK(serialize(x) == serialize(y));
  CHECK(canvas_digest(x) == canvas_digest(y));
  y.apply(ev("a2", 1, 0, 2));
  CHECK(serialize(x) != serialize(y));
}

TEST_CASE("pixel codec uses one hex digit per pixel for 16-color palettes") {
  const CellGeometry g{};
  Rng rng(3);
  const CellPayload p = random_payload(g, rng);
  const std::string text = codec::encode_pixels(p, g);
  CHECK(text.size() == 64);
  CHECK(codec::decode_pixels(text, g) == p);

  const CellGeometry wide{4, 200};
  CellPayload q(std::vector<std::uint8_t>(16, 199));
  CHECK(codec::encode_pixels(q, wide).size() == 32);
  CHECK(codec::decode_pixels(codec::encode_pixels(q, wide), wide) == q);
  CHECK_THROWS_AS(codec::decode_pixels("zz", g), Error);
}
