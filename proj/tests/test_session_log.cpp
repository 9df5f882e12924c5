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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "poietic/session_log.hpp"
#include "test_support.hpp"

using namespace poietic;
using poietic::testing::A;
using poietic::testing::random_payload;

namespace {

rec::Genesis genesis(const CellGeometry& g = {}) {
  rec::Genesis gen;
  gen.session_id = "s";
  gen.geometry = g;
  gen.code = vanishing_code(GenesisConfig{"s", g, Topology{}});
  return gen;
}

// A log exercising every record type, with a canvas that evolves so frame
// observations carry real deltas.
SessionLog sample_log(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  CellGeometry g;
  SessionLog log;
  log.records.push_back(genesis(g));
  Canvas canvas(g);
  std::vector<AgentId> agents;
  Seq seq = 0;
  std::uint64_t msg = 0;
  for (Tick t = 1; log.records.size() < n; ++t) {
    if (agents.size() < 5 || rng.bernoulli(0.05)) {
      AgentId a("a" + std::to_string(agents.size() + 1));
      log.records.push_back(rec::JoinRequest{t, a, rng.bernoulli(0.2) ? Role::kOperator : Role::kOrdinary});
      const Position p = canvas.add_member(a);
      log.records.push_back(rec::JoinOutcome{t, a, true, p, ""});
      agents.push_back(a);
    }
    const AgentId& who = agents[rng.below(agents.size())];
    Event e{who, t, ++seq, random_payload(g, rng)};
    canvas.apply(e);
    log.records.push_back(rec::EventSent{t, e});
    log.records.push_back(rec::MessageSent{t, ++msg, who, server_node(), Channel::kUplink});
    log.records.push_back(rec::Delivery{t, msg, who, server_node(), t});
    const AgentId& viewer = agents[rng.below(agents.size())];
    log.records.push_back(
        rec::FrameObserved{t, viewer, std::make_shared<const Frame>(render_frame(canvas, t))});
    if (t % 7 == 0) {
      log.records.push_back(rec::Rejected{t, server_node(), "non-member", EventKey{A("ghost"), 3}});
      log.records.push_back(rec::TickMark{t, static_cast<std::int64_t>(1000 * t)});
      InterceptionRecord ir{t,   "selective_drop", 2, InterceptionAction::kStrip, msg, server_node(), viewer,
                            who, "p=0.5"};
      log.records.push_back(rec::GroundTruth{ir});
    }
    if (t % 11 == 0) {
      log.records.push_back(rec::LeaveRequest{t, agents.front()});
      log.records.push_back(rec::LeaveOutcome{t, agents.front(), false});
    }
  }
  log.records.push_back(rec::Quiescent{log.last_tick(), true, 4});
  return log;
}

}  // namespace

TEST_CASE("log round-trips every record type") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SessionLog log = sample_log(100, seed);
    const std::string text = serialize_log(log);
    const ReplayResult back = parse_log(text);
    CHECK(back.warnings.empty());
    CHECK(back.bytes_consumed == text.size());
    REQUIRE(back.log.records.size() == log.records.size());
    for (std::size_t i = 0; i < log.records.size(); ++i) {
      INFO("record " << i << " type " << record_type(log.records[i]));
      CHECK(back.log.records[i] == log.records[i]);
    }
    CHECK(serialize_log(back.log) == text);
  }
}

TEST_CASE("each line is one JSON object with a type key") {
  const std::string text = serialize_log(sample_log(40, 9));
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    REQUIRE(nl != std::string::npos);
    const auto j = nlohmann::json::parse(text.substr(start, nl - start));
    CHECK(j.is_object());
    CHECK(j.contains("type"));
    start = nl + 1;
  }
}

TEST_CASE("frame observations are deltas against the agent's previous view") {
  CellGeometry g;
  Canvas c(g);
  c.add_member(A("a1"));
  c.add_member(A("a2"));
  c.apply(Event{A("a1"), 1, 1, CellPayload::filled(g, 3)});
  auto f1 = std::make_shared<const Frame>(render_frame(c, 1));
  c.apply(Event{A("a2"), 2, 2, CellPayload::filled(g, 4)});
  auto f2 = std::make_shared<const Frame>(render_frame(c, 2));

  LogEncoder enc;
  enc.encode(genesis(g));
  const auto first = nlohmann::json::parse(enc.encode(rec::FrameObserved{1, A("a1"), f1}));
  CHECK(first.contains("membership"));
  CHECK(first["cells"].size() == 1);
  const auto second = nlohmann::json::parse(enc.encode(rec::FrameObserved{2, A("a1"), f2}));
  CHECK_FALSE(second.contains("membership"));
  CHECK(second["cells"].size() == 1);
  // Another agent's first observation is self-contained.
  const auto other = nlohmann::json::parse(enc.encode(rec::FrameObserved{2, A("a2"), f2}));
  CHECK(other["cells"].size() == 2);
}

TEST_CASE("a truncated final record is dropped with a warning") {
  const SessionLog log = sample_log(60, 3);
  const std::string text = serialize_log(log);
  const std::size_t last_start = text.rfind('\n', text.size() - 2) + 1;

  SUBCASE("cut mid-line") {
    const std::string cut = text.substr(0, last_start + (text.size() - last_start) / 2);
    const ReplayResult r = parse_log(cut);
    CHECK(r.log.records.size() == log.records.size() - 1);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find(std::to_string(last_start)) != std::string::npos);
    CHECK(r.bytes_consumed == last_start);
  }
  SUBCASE("garbage final line") {
    const std::string bad = text.substr(0, last_start) + "{\"type\":\"quies\n";
    const ReplayResult r = parse_log(bad);
    CHECK(r.log.records.size() == log.records.size() - 1);
    CHECK(r.warnings.size() == 1);
  }
}

TEST_CASE("mid-file corruption names the byte offset") {
  const std::string text = serialize_log(sample_log(60, 4));
  std::size_t offset = 0;
  for (int i = 0; i < 10; ++i) offset = text.find('\n', offset) + 1;
  std::string bad = text;
  bad[offset + 2] = '#';
  try {
    parse_log(bad);
    FAIL("expected corrupt-log error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruptLog);
    CHECK(std::string(e.what()).find("offset " + std::to_string(offset)) != std::string::npos);
  }
}

TEST_CASE("empty input parses to an empty log") {
  const ReplayResult r = parse_log("");
  CHECK(r.log.empty());
  CHECK(r.warnings.empty());
  CHECK(r.log.genesis() == nullptr);
}

TEST_CASE("a log must open with genesis") {
  LogEncoder enc;
  enc.encode(genesis());
  const std::string line = enc.encode(rec::Quiescent{1, true, 0}) + "\n";
  CHECK_THROWS_AS(parse_log(line + line), Error);
}

TEST_CASE("strip_ground_truth keeps everything else in order") {
  const SessionLog log = sample_log(80, 6);
  const SessionLog stripped = strip_ground_truth(log);
  std::size_t gt = 0;
  for (const Record& r : log.records) gt += std::holds_alternative<rec::GroundTruth>(r);
  CHECK(gt > 0);
  CHECK(stripped.records.size() == log.records.size() - gt);
}

TEST_CASE("LogWriter appends durably and resumes after priming") {
  const auto dir = std::filesystem::temp_directory_path() / "poietic_log_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "session.log";
  const SessionLog log = sample_log(50, 8);
  const std::size_t half = log.records.size() / 2;
  {
    LogWriter w(path);
    for (std::size_t i = 0; i < half; ++i) w.append(log.records[i]);
    // Visible without closing the writer.
    CHECK(read_log_file(path).log.records.size() == half);
  }
  {
    const ReplayResult prefix = read_log_file(path);
    LogWriter w(path, false);
    w.prime(prefix.log);
    for (std::size_t i = half; i < log.records.size(); ++i) w.append(log.records[i]);
  }
  const ReplayResult all = read_log_file(path);
  CHECK(all.log.records == log.records);
  std::filesystem::remove_all(dir);
}
