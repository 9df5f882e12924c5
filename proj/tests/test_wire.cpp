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

#include <regex>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "poietic/wire.hpp"
#include "test_support.hpp"

using namespace poietic;
using namespace poietic::wire;
using poietic::testing::A;

namespace {

const CellGeometry kGeo{};

VanishingCode session_code() { return vanishing_code(GenesisConfig{"wire-test", kGeo, Topology{}}); }

Frame sample_frame(Tick tick) {
  Canvas c;
  c.add_member(A("alice"));
  c.add_member(A("bob"));
  c.apply(Event{A("bob"), 1, 4, CellPayload::filled(kGeo, 9)});
  return render_frame(c, tick);
}

std::vector<Message> one_of_each() {
  const VanishingCode code = session_code();
  TraceEvidence failed{EventKey{A("alice"), 3}, 7, TraceStatus::kFailed, std::nullopt};
  Frame f = sample_frame(5);
  return {
      Message{code, Join{A("alice"), Role::kOperator, false}},
      Message{code, Join{AgentId{}, Role::kOrdinary, true}},
      Message{code, JoinAck{A("alice"), Position{0, 1}, kGeo, palette_colors(16), "wire-test",
                            TopologyKind::kDP, 12, false}},
      Message{code, JoinAck{AgentId{}, std::nullopt, kGeo, palette_colors(16), "wire-test", TopologyKind::kTP,
                            0, true}},
      Message{code, EventMsg{A("alice"), 17, CellPayload::filled(kGeo, 3)}},
      Message{code, FrameMsg{6, f}},
      Message{code, DeltaMsg{7, 6, 2, diff_frames(sample_frame(5), f)}},
      Message{code, DeltaMsg{8, 7, 2,
                             FrameDiff{{Position{0, 0},
                                        Cell{CellPayload::filled(kGeo, 1), A("alice"), Stamp{7, 2}}},
                                       {Position{1, 1}, std::nullopt}}}},
      Message{code, Leave{A("alice")}},
      Message{code, LeaveAck{A("alice"), 40}},
      Message{code, AuditBadge{A("alice"), 50, false, 10, 6, 2, 1, {failed}}},
      Message{code, ErrorMsg{reason::kCodeMismatch, "this session's code is ..."}},
  };
}

std::string reason_of(std::string_view line) {
  try {
    decode(line, kGeo);
  } catch (const WireError& e) {
    return e.reason();
  }
  return "accepted";
}

std::string with(const std::string& kind, nlohmann::json body) {
  body["v"] = 1;
  body["kind"] = kind;
  body["code"] = session_code().hex();
  return body.dump();
}

}  // namespace

TEST_CASE("every kind round-trips through one self-delimited line") {
  std::set<Kind> kinds;
  for (const Message& m : one_of_each()) {
    const std::string line = encode(m, kGeo);
    CHECK(line.back() == '\n');
    CHECK(std::count(line.begin(), line.end(), '\n') == 1);
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("v") == 1);
    CHECK(j.at("kind") == to_string(m.kind()));
    CHECK(j.at("code") == session_code().hex());
    CHECK(decode(line, kGeo) == m);
    CHECK(encode(decode(line, kGeo), kGeo) == line);
    kinds.insert(m.kind());
  }
  CHECK(kinds.size() == 9);
}

TEST_CASE("kind names are fixed strings") {
  const std::vector<std::string> names{"JOIN",  "JOIN_ACK",  "EVENT",       "FRAME", "DELTA",
                                       "LEAVE", "LEAVE_ACK", "AUDIT_BADGE", "ERROR"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    CHECK(to_string(static_cast<Kind>(i)) == names[i]);
    CHECK(kind_from_string(names[i]) == static_cast<Kind>(i));
  }
  CHECK_FALSE(kind_from_string("join").has_value());
  CHECK(client_kind(Kind::kJoin));
  CHECK(client_kind(Kind::kEvent));
  CHECK(client_kind(Kind::kLeave));
  CHECK_FALSE(client_kind(Kind::kFrame));
  CHECK_FALSE(client_kind(Kind::kAuditBadge));
}

TEST_CASE("decode rejects bad input with a protocol reason") {
  CHECK(reason_of("hello") == reason::kMalformed);
  CHECK(reason_of("[1,2]") == reason::kMalformed);
  CHECK(reason_of(with("SHOUT", {{"agent", "a"}})) == reason::kUnknownKind);
  CHECK(reason_of(with("LEAVE", {{"agent", "alice"}})) == "accepted");
  CHECK(reason_of(with("LEAVE", {})) == reason::kMalformed);
  CHECK(reason_of(with("LEAVE", {{"agent", "has space"}})) == reason::kMalformed);
  CHECK(reason_of(with("LEAVE", {{"agent", "server"}})) == reason::kMalformed);
  CHECK(reason_of(with("EVENT", {{"agent", "alice"}, {"seq", -1}, {"pixels", std::string(64, '0')}})) ==
        reason::kMalformed);
  CHECK(reason_of(with("EVENT", {{"agent", "alice"}, {"seq", 1}, {"pixels", std::string(63, '0')}})) ==
        reason::kMalformed);
  CHECK(reason_of(with("EVENT", {{"agent", "alice"}, {"seq", 1}, {"pixels", std::string(64, 'g')}})) ==
        reason::kMalformed);
  CHECK(reason_of(with("JOIN", {{"agent", "alice"}, {"role", "king"}})) == reason::kMalformed);

  nlohmann::json old = nlohmann::json::parse(with("LEAVE", {{"agent", "alice"}}));
  old["v"] = 2;
  CHECK(reason_of(old.dump()) == reason::kMalformed);
  old["v"] = 1;
  old["code"] = "abc";
  CHECK(reason_of(old.dump()) == reason::kMalformed);
  old.erase("code");
  CHECK(reason_of(old.dump()) == reason::kMalformed);

  CHECK(reason_of(std::string(kMaxLineBytes + 1, ' ')) == reason::kMalformed);
  // CRLF line endings are tolerated.
  CHECK(reason_of(with("LEAVE", {{"agent", "alice"}}) + "\r\n") == "accepted");
}

TEST_CASE("agent id syntax") {
  CHECK(valid_agent_id("ghost-1"));
  CHECK(valid_agent_id("A.b_c-9"));
  CHECK(valid_agent_id(std::string(64, 'x')));
  CHECK_FALSE(valid_agent_id(std::string(65, 'x')));
  CHECK_FALSE(valid_agent_id(""));
  CHECK_FALSE(valid_agent_id("server"));
  CHECK_FALSE(valid_agent_id("a/b"));
  CHECK_FALSE(valid_agent_id("\xc3\xa9"));
}

TEST_CASE("palette colours are distinct #rrggbb strings") {
  const std::regex hex("#[0-9a-f]{6}");
  for (std::uint32_t n : {2u, 16u, 40u, 256u}) {
    const auto colors = palette_colors(n);
    REQUIRE(colors.size() == n);
    for (const auto& c : colors) CHECK(std::regex_match(c, hex));
    CHECK(std::set<std::string>(colors.begin(), colors.end()).size() == n);
  }
  CHECK(palette_colors(16)[0] == "#000000");
  CHECK(palette_colors(40)[15] == palette_colors(16)[15]);
}

TEST_CASE("make_badge summarises a trace report") {
  TraceReport r{A("alice"), false, {}};
  const TraceStatus statuses[] = {TraceStatus::kSatisfied, TraceStatus::kSatisfied, TraceStatus::kSuperseded,
                                  TraceStatus::kFailed,    TraceStatus::kPending,   TraceStatus::kFailed};
  Seq seq = 0;
  for (TraceStatus s : statuses) {
    r.evidence.push_back(TraceEvidence{EventKey{A("alice"), seq}, seq * 2, s, std::nullopt});
    ++seq;
  }
  const AuditBadge b = make_badge(r, 30);
  CHECK_FALSE(b.intact);
  CHECK(b.tick == 30);
  CHECK(b.events == 6);
  CHECK(b.satisfied == 2);
  CHECK(b.superseded == 1);
  CHECK(b.pending == 1);
  REQUIRE(b.failed.size() == 2);
  CHECK(b.failed[0].event.seq == 3);
  CHECK(b.failed[1].tick == 10);
}

TEST_CASE("ClientView: echo discipline and badge fidelity") {
  const VanishingCode code = session_code();
  ClientView view(code);
  CHECK(view.badge() == ClientView::Badge::kUnknown);
  CHECK_THROWS_AS(view.paint(CellPayload::filled(kGeo, 1)), Error);

  view.receive(Message{
      code, JoinAck{A("alice"), Position{0, 0}, kGeo, palette_colors(16), "s", TopologyKind::kTP, 0, false}});
  REQUIRE(view.joined());
  CHECK(view.palette().size() == 16);

  const Message first = view.paint(CellPayload::filled(kGeo, 4));
  const Message second = view.paint(CellPayload::filled(kGeo, 5));
  CHECK(std::get<EventMsg>(first.body).seq == 0);
  CHECK(std::get<EventMsg>(second.body).seq == 1);
  CHECK(view.pending().size() == 2);
  CHECK_THROWS_AS(view.paint(CellPayload::filled(kGeo, 16)), Error);

  Canvas c;
  c.add_member(A("alice"));
  c.add_member(A("bob"));
  view.receive(Message{code, FrameMsg{1, render_frame(c, 0)}});
  CHECK(view.pending().size() == 2);

  // A frame with the right stamp but someone else's payload confirms nothing.
  Canvas lie = c;
  lie.apply(Event{A("alice"), 1, 0, CellPayload::filled(kGeo, 7)});
  view.receive(Message{code, FrameMsg{2, render_frame(lie, 1)}});
  CHECK(view.pending().size() == 2);
  CHECK(view.confirmed() == 0);

  // The second edit shows up: the first can never be shown any more.
  c.apply(Event{A("alice"), 1, 1, CellPayload::filled(kGeo, 5)});
  const Frame before = render_frame(lie, 1);
  const Frame after = render_frame(c, 2);
  view.receive(Message{code, DeltaMsg{3, 2, after.dims, diff_frames(before, after)}});
  CHECK(view.pending().empty());
  CHECK(view.confirmed() == 1);
  CHECK(view.superseded() == 1);
  CHECK(view.frame()->cells == after.cells);
  CHECK(view.last_repaint() == std::vector<Position>{Position{0, 0}});

  // Another agent's DELTA repaints only that cell.
  c.apply(Event{A("bob"), 3, 0, CellPayload::filled(kGeo, 2)});
  const Frame third = render_frame(c, 3);
  view.receive(Message{code, DeltaMsg{4, 3, third.dims, diff_frames(after, third)}});
  CHECK(view.last_repaint() == std::vector<Position>{*c.position_of(A("bob"))});

  view.receive(Message{code, AuditBadge{A("alice"), 10, false, 2, 1, 0, 0, {}}});
  CHECK(view.badge() == ClientView::Badge::kAlienated);
  view.receive(Message{code, AuditBadge{A("alice"), 20, true, 2, 2, 0, 0, {}}});
  CHECK(view.badge() == ClientView::Badge::kIntact);
  CHECK(view.last_badge()->tick == 20);
  // Someone else's badge and foreign-code traffic leave the view alone.
  view.receive(Message{code, AuditBadge{A("bob"), 30, false, 2, 0, 0, 0, {}}});
  CHECK(view.badge() == ClientView::Badge::kIntact);
  VanishingCode other = code;
  other.bytes[0] ^= 1;
  view.receive(Message{other, AuditBadge{A("alice"), 40, false, 2, 0, 0, 0, {}}});
  CHECK(view.badge() == ClientView::Badge::kIntact);
  CHECK(view.foreign_messages() == 1);

  view.receive(Message{code, ErrorMsg{reason::kNonMember, "x"}});
  CHECK(view.last_error()->reason == reason::kNonMember);
  view.receive(Message{code, LeaveAck{A("alice"), 50}});
  CHECK_FALSE(view.joined());
}

TEST_CASE("ClientView: a DELTA before any FRAME is ignored") {
  const VanishingCode code = session_code();
  ClientView view(code);
  view.receive(Message{code, DeltaMsg{1, 0, 1, {}}});
  CHECK_FALSE(view.frame().has_value());
  CHECK(view.frames_received() == 0);
}
