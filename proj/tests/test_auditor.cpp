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
#include "poietic/auditor.hpp"
#include "test_support.hpp"

using namespace poietic;
using poietic::testing::A;

namespace {

// Builds small logs by hand. `truth` is the honest global canvas.
struct LogBuilder {
  CellGeometry g;
  SessionLog log;
  Canvas truth{CellGeometry{}};
  Seq seq = 0;
  std::uint64_t msg = 0;

  LogBuilder() {
    rec::Genesis gen;
    gen.session_id = "t";
    gen.code = vanishing_code(GenesisConfig{"t", g, Topology{}});
    log.records.push_back(gen);
  }
  Position join(const std::string& a, Tick t, Role role = Role::kOrdinary) {
    log.records.push_back(rec::JoinRequest{t, A(a), role});
    const Position p = truth.add_member(A(a));
    log.records.push_back(rec::JoinOutcome{t, A(a), true, p, ""});
    return p;
  }
  void refuse(const std::string& a, Tick t) {
    log.records.push_back(rec::JoinRequest{t, A(a), Role::kOrdinary});
    log.records.push_back(rec::JoinOutcome{t, A(a), false, std::nullopt, "admission-refused"});
  }
  void leave(const std::string& a, Tick t) {
    log.records.push_back(rec::LeaveRequest{t, A(a)});
    truth.remove_member(A(a), t);
    log.records.push_back(rec::LeaveOutcome{t, A(a), true});
  }
  Event paint(const std::string& a, Tick t, std::uint8_t color, bool apply = true) {
    Event e{A(a), t, ++seq, CellPayload::filled(g, color)};
    if (apply) truth.apply(e);
    log.records.push_back(rec::EventSent{t, e});
    return e;
  }
  void see(const std::string& a, Tick t) { see(a, t, truth); }
  void see(const std::string& a, Tick t, const Canvas& view) {
    log.records.push_back(rec::FrameObserved{t, A(a), std::make_shared<const Frame>(render_frame(view, t))});
  }
  void message(const std::string& from, const std::string& to, Tick t, std::optional<Tick> delivered) {
    ++msg;
    log.records.push_back(rec::MessageSent{t, msg, A(from), A(to), Channel::kDownlink});
    if (delivered) log.records.push_back(rec::Delivery{*delivered, msg, A(from), A(to), t});
  }
  void quiescent(Tick t) { log.records.push_back(rec::Quiescent{t, true, 0}); }
  void mark(Tick t) { log.records.push_back(rec::TickMark{t, 0}); }
};

}  // namespace

TEST_CASE("self-trace: a shown event is satisfied, an absent one fails after W") {
  LogBuilder b;
  b.join("a1", 0);
  b.paint("a1", 1, 3);
  b.see("a1", 2);
  SUBCASE("honest") {
    b.mark(20);
    const TraceReport r = audit_self_trace(A("a1"), b.log, 5);
    CHECK(r.intact);
    REQUIRE(r.evidence.size() == 1);
    CHECK(r.evidence[0].status == TraceStatus::kSatisfied);
    CHECK(r.evidence[0].seen_at == Tick{2});
  }
  SUBCASE("hidden from its author") {
    Canvas stale = b.truth;
    b.paint("a1", 3, 4, false);  // never reaches the canvas
    for (Tick t = 4; t <= 9; ++t) b.see("a1", t, stale);
    const TraceReport r = audit_self_trace(A("a1"), b.log, 5);
    CHECK_FALSE(r.intact);
    CHECK(r.count(TraceStatus::kFailed) == 1);
    CHECK(r.evidence[1].event.seq == 2);
  }
  SUBCASE("log ends before the window closes") {
    b.paint("a1", 3, 4, false);
    b.see("a1", 4);
    const TraceReport r = audit_self_trace(A("a1"), b.log, 5);
    CHECK(r.intact);
    CHECK(r.count(TraceStatus::kPending) == 1);
  }
}

TEST_CASE("self-trace: overwriting before the next frame is not alienation") {
  LogBuilder b;
  b.join("a1", 0);
  b.paint("a1", 1, 3);
  b.paint("a1", 2, 4);  // no frame in between
  b.see("a1", 3);
  b.mark(30);
  const TraceReport r = audit_self_trace(A("a1"), b.log, 5);
  CHECK(r.intact);
  CHECK(r.evidence[0].status == TraceStatus::kSuperseded);
  CHECK(r.evidence[1].status == TraceStatus::kSatisfied);
}

TEST_CASE("self-trace: an agent shown no frames at all fails on its last event") {
  LogBuilder b;
  b.join("a1", 0);
  for (Tick t = 1; t <= 10; ++t) b.paint("a1", t, static_cast<std::uint8_t>(t % 16));
  b.mark(30);
  const TraceReport r = audit_self_trace(A("a1"), b.log, 5);
  CHECK_FALSE(r.intact);
  CHECK(r.count(TraceStatus::kSuperseded) == 9);
  CHECK(r.evidence.back().status == TraceStatus::kFailed);
}

TEST_CASE("self-trace: a frame with an older stamp for the same payload does not count") {
  LogBuilder b;
  b.join("a1", 0);
  b.paint("a1", 1, 3);
  b.see("a1", 2);
  Canvas stale = b.truth;
  b.paint("a1", 3, 3, false);  // same colour, new stamp, dropped
  for (Tick t = 4; t <= 10; ++t) b.see("a1", t, stale);
  CHECK_FALSE(audit_self_trace(A("a1"), b.log, 5).intact);
}

TEST_CASE("self-trace: leaving before the deadline leaves events unjudged") {
  LogBuilder b;
  b.join("a1", 0);
  b.join("a2", 0);
  b.paint("a1", 1, 3, false);
  b.see("a1", 2);
  b.leave("a1", 3);
  b.mark(40);
  const TraceReport r = audit_self_trace(A("a1"), b.log, 5);
  CHECK(r.intact);
  CHECK(r.evidence[0].status == TraceStatus::kPending);
}

TEST_CASE("self-trace: silent agent is vacuously intact, unknown agent is an error") {
  LogBuilder b;
  b.join("a1", 0);
  b.see("a1", 1);
  CHECK(audit_self_trace(A("a1"), b.log, 5).intact);
  try {
    audit_self_trace(A("zz"), b.log, 5);
    FAIL("expected unknown-agent");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownAgent);
  }
}

TEST_CASE("closure score: 10 senders with 2 shadow-banned") {
  LogBuilder b;
  for (int i = 1; i <= 10; ++i) b.join("a" + std::to_string(i), 0);
  const std::set<std::string> banned{"a3", "a7"};
  Canvas shown(b.g);
  for (int i = 1; i <= 10; ++i) shown.add_member(A("a" + std::to_string(i)));
  for (int i = 1; i <= 10; ++i) {
    const std::string a = "a" + std::to_string(i);
    const Event e = b.paint(a, 1, static_cast<std::uint8_t>(i));
    if (!banned.contains(a)) shown.apply(e);
  }
  for (Tick t = 2; t <= 12; ++t) {
    for (int i = 1; i <= 10; ++i) b.see("a" + std::to_string(i), t, shown);
  }
  const ClosureResult c = closure_score(b.log, 5);
  // Oracle: direct count.
  REQUIRE(c.score.has_value());
  CHECK(*c.score == doctest::Approx(8.0 / 10.0));
  CHECK(c.alienated == std::set<AgentId>{A("a3"), A("a7")});
}

TEST_CASE("closure score is undefined without senders") {
  LogBuilder b;
  b.join("a1", 0);
  CHECK_FALSE(closure_score(b.log, 5).score.has_value());
}

TEST_CASE("closure score: everything suppressed alienates every sender") {
  LogBuilder b;
  b.join("a1", 0);
  b.join("a2", 0);
  const Canvas empty = b.truth;
  b.paint("a1", 1, 1);
  b.paint("a2", 1, 2);
  for (Tick t = 2; t <= 10; ++t) {
    b.see("a1", t, empty);
    b.see("a2", t, empty);
  }
  const ClosureResult c = closure_score(b.log, 3);
  CHECK(*c.score == 0.0);
  CHECK(c.alienated.size() == 2);
}

TEST_CASE("criterion A") {
  LogBuilder b;
  b.join("a1", 0);
  b.join("a2", 1);
  b.join("a3", 2);
  b.leave("a2", 5);
  SUBCASE("honest joins and a leave pass; the departed cell may persist") {
    b.see("a1", 6);
    CHECK(check_criterion_a(b.log).status == CheckStatus::kPass);
  }
  SUBCASE("refused join") {
    b.refuse("a4", 11);
    const CriterionA r = check_criterion_a(b.log);
    CHECK(r.status == CheckStatus::kFail);
    REQUIRE(r.evidence.size() == 1);
    CHECK(r.evidence[0].find("a4") != std::string::npos);
    CHECK(r.evidence[0].find("tick 11") != std::string::npos);
  }
  SUBCASE("unanswered and late joins") {
    b.log.records.push_back(rec::JoinRequest{6, A("a5"), Role::kOrdinary});
    b.mark(7);
    CHECK(check_criterion_a(b.log).status == CheckStatus::kPass);  // still inside the window
    b.mark(12);
    CHECK(check_criterion_a(b.log).status == CheckStatus::kFail);
  }
  SUBCASE("traffic after leave") {
    b.message("server", "a2", 6, Tick{7});
    CHECK(check_criterion_a(b.log).status == CheckStatus::kFail);
  }
  SUBCASE("member hidden from its own view") {
    Canvas view = b.truth;
    view.adopt_membership({{A("a3"), Position{1, 0}}}, 2);
    b.see("a1", 6, view);
    const CriterionA r = check_criterion_a(b.log);
    CHECK(r.status == CheckStatus::kFail);
    CHECK(r.evidence[0].find("absent") != std::string::npos);
  }
  SUBCASE("phantom member") {
    Canvas view = b.truth;
    Membership m = view.membership();
    m[A("ghost")] = Position{1, 1};
    view.adopt_membership(m, 2);
    b.see("a1", 6, view);
    CHECK(check_criterion_a(b.log).status == CheckStatus::kFail);
  }
}

TEST_CASE("criterion AB: asymmetric loss is measured per role") {
  LogBuilder b;
  b.join("op", 0, Role::kOperator);
  b.join("a1", 0);
  b.join("a2", 0);
  Rng rng(7);
  std::size_t ord_sent = 0, ord_lost = 0;
  for (Tick t = 1; t <= 600; ++t) {
    b.message("server", "op", t, t + 1);
    for (const char* a : {"a1", "a2"}) {
      const bool lost = rng.bernoulli(0.3);
      ++ord_sent;
      ord_lost += lost;
      b.message("server", a, t, lost ? std::nullopt : std::optional<Tick>(t + 1));
    }
  }
  b.mark(602);
  const CriterionAB r = check_criterion_ab(b.log, 0.05);
  CHECK(r.status == CheckStatus::kFail);
  const double oracle = static_cast<double>(ord_lost) / static_cast<double>(ord_sent);
  CHECK(r.roles.at(Role::kOrdinary).sent == ord_sent);
  CHECK(*r.roles.at(Role::kOrdinary).loss_rate == doctest::Approx(oracle));
  CHECK(*r.roles.at(Role::kOperator).loss_rate == 0.0);
  CHECK(*r.loss_gap == doctest::Approx(oracle));
  CHECK(*r.loss_gap > 0.25);
  CHECK(*r.latency_gap == 0.0);
}

TEST_CASE("criterion AB: symmetric, single-role and empty-role sessions") {
  LogBuilder b;
  b.join("op", 0, Role::kOperator);
  b.join("a1", 0);
  SUBCASE("symmetric") {
    for (Tick t = 1; t <= 10; ++t) {
      b.message("server", "op", t, t + 1);
      b.message("server", "a1", t, t + 1);
    }
    b.mark(12);
    const CriterionAB r = check_criterion_ab(b.log);
    CHECK(r.status == CheckStatus::kPass);
    CHECK(*r.loss_gap == 0.0);
  }
  SUBCASE("a role with no traffic") {
    b.message("server", "a1", 1, Tick{2});
    b.mark(3);
    CHECK(check_criterion_ab(b.log).status == CheckStatus::kInsufficientData);
  }
  SUBCASE("latency gap") {
    for (Tick t = 1; t <= 10; ++t) {
      b.message("server", "op", t, t + 1);
      b.message("server", "a1", t, t + 2);
    }
    b.mark(20);
    const CriterionAB r = check_criterion_ab(b.log);
    CHECK(r.status == CheckStatus::kFail);
    CHECK(*r.latency_gap == doctest::Approx(1.0));
  }
}

TEST_CASE("criterion AB: single role passes with a warning") {
  LogBuilder b;
  b.join("a1", 0);
  b.message("server", "a1", 1, Tick{2});
  const CriterionAB r = check_criterion_ab(b.log);
  CHECK(r.status == CheckStatus::kPass);
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("frame agreement over the union of positions") {
  CellGeometry g;
  Canvas c(g);
  for (int i = 1; i <= 4; ++i) c.add_member(A("a" + std::to_string(i)));
  for (int i = 1; i <= 4; ++i)
    c.apply(Event{A("a" + std::to_string(i)), 1, Seq(i), CellPayload::filled(g, 1)});
  const Frame f = render_frame(c, 1);
  Canvas d = c;
  d.apply(Event{A("a2"), 2, 9, CellPayload::filled(g, 2)});
  CHECK(frame_agreement(f, f) == 1.0);
  CHECK(frame_agreement(f, render_frame(d, 2)) == doctest::Approx(0.75));
  CHECK(frame_agreement(Frame{}, Frame{}) == 1.0);
  CHECK(frame_agreement(f, Frame{}) == 0.0);
}

TEST_CASE("criterion ABC") {
  LogBuilder b;
  const int n = 6;
  for (int i = 1; i <= n; ++i) b.join("a" + std::to_string(i), 0);
  for (int i = 1; i <= n; ++i) b.paint("a" + std::to_string(i), 1, static_cast<std::uint8_t>(i));
  SUBCASE("converged views pass with unit agreement") {
    for (int i = 1; i <= n; ++i) b.see("a" + std::to_string(i), 2);
    b.quiescent(2);
    const CriterionABC r = check_criterion_abc(b.log);
    CHECK(r.status == CheckStatus::kPass);
    REQUIRE(r.points.size() == 1);
    CHECK(r.points[0].min_agreement == 1.0);
  }
  SUBCASE("a lie shown to half the agents splits the matrix into blocks") {
    Canvas lie = b.truth;
    lie.put_cell(*lie.position_of(A("a1")), Cell{CellPayload::filled(b.g, 15), A("a1"), Stamp{1, 1}});
    for (int i = 1; i <= n; ++i) b.see("a" + std::to_string(i), 2, i <= n / 2 ? lie : b.truth);
    b.quiescent(2);
    const CriterionABC r = check_criterion_abc(b.log);
    CHECK(r.status == CheckStatus::kFail);
    const auto& m = r.points[0].agreement;
    CHECK(m[0][1] == 1.0);
    CHECK(m[3][4] == 1.0);
    CHECK(m[0][4] == doctest::Approx(5.0 / 6.0));
  }
  SUBCASE("a partition leaves the observability graph disconnected") {
    Canvas left(b.g), right(b.g);
    for (int i = 1; i <= n; ++i) {
      left.add_member(A("a" + std::to_string(i)));
      right.add_member(A("a" + std::to_string(i)));
    }
    for (const Record& r : b.log.records) {
      if (const auto* e = std::get_if<rec::EventSent>(&r)) {
        const int idx = std::stoi(e->event.agent.str().substr(1));
        (idx <= n / 2 ? left : right).apply(e->event);
      }
    }
    for (int i = 1; i <= n; ++i) b.see("a" + std::to_string(i), 2, i <= n / 2 ? left : right);
    b.quiescent(2);
    const CriterionABC r = check_criterion_abc(b.log, 0.0);  // agreement ignored
    CHECK(r.status == CheckStatus::kFail);
    CHECK_FALSE(r.points[0].strongly_connected);
  }
  SUBCASE("one observer is not enough") {
    b.see("a1", 2);
    CHECK(check_criterion_abc(b.log).status == CheckStatus::kInsufficientData);
  }
}

TEST_CASE("report aggregation and blindness to ground truth") {
  LogBuilder b;
  b.join("op", 0, Role::kOperator);
  b.join("a1", 0);
  b.paint("op", 1, 2);
  b.paint("a1", 1, 3);
  for (Tick t = 2; t <= 4; ++t) {
    b.message("server", "op", t - 1, t);
    b.message("server", "a1", t - 1, t);
    b.see("op", t);
    b.see("a1", t);
  }
  b.quiescent(4);
  const LegitimacyReport honest = legitimacy_report(b.log);
  CHECK(honest.overall == Verdict::kLegitimate);
  CHECK(exit_code(honest.overall) == 0);

  SessionLog with_truth = b.log;
  InterceptionRecord ir{2,       "passive_spy", 2, InterceptionAction::kObserve, 1, server_node(),
                        A("a1"), A("a1"),       ""};
  with_truth.records.insert(with_truth.records.begin() + 3, rec::GroundTruth{ir});
  CHECK(to_json(legitimacy_report(with_truth)).dump() == to_json(honest).dump());

  b.refuse("late", 5);
  const LegitimacyReport refused = legitimacy_report(b.log);
  CHECK(refused.overall == Verdict::kIllegitimate);
  CHECK(exit_code(refused.overall) == 2);

  LogBuilder empty;
  CHECK(legitimacy_report(empty.log).overall == Verdict::kInsufficientData);
  CHECK(exit_code(Verdict::kInsufficientData) == 3);
}

TEST_CASE("enlarging the window never alienates an intact agent") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Rng rng(seed);
    LogBuilder b;
    b.join("a1", 0);
    b.join("a2", 0);
    Canvas shown = b.truth;
    for (Tick t = 1; t <= 60; ++t) {
      for (const char* a : {"a1", "a2"}) {
        if (rng.bernoulli(0.3)) b.see(a, t, shown);
        if (rng.bernoulli(0.4)) {
          const Event e = b.paint(a, t, static_cast<std::uint8_t>(rng.below(16)));
          // Content reaches the shown view late or never.
          if (rng.bernoulli(0.7)) shown.apply(e);
        }
      }
    }
    for (const char* a : {"a1", "a2"}) {
      bool was_intact = false;
      for (Tick w = 1; w <= 40; ++w) {
        const bool intact = audit_self_trace(A(a), b.log, w).intact;
        CHECK_FALSE((was_intact && !intact));
        was_intact = intact;
      }
    }
  }
}
