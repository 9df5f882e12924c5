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

// Log-only legitimacy checks: per-agent self-trace closure plus the three
// criteria (free entry and exit, symmetric treatment, mutual agreement).
// Nothing here reads GroundTruth records.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "poietic/session_log.hpp"

namespace poietic {

struct AuditParams {
  Tick window = 50;
  double epsilon = 0.05;
  double theta = 0.99;
  Tick admission_window = 5;

  /// Throws kInvalidConfig.
  void validate() const;
};

enum class Verdict { kLegitimate, kIllegitimate, kInsufficientData };
const char* to_string(Verdict v);

enum class CheckStatus { kPass, kFail, kInsufficientData };
const char* to_string(CheckStatus s);

enum class TraceStatus { kSatisfied, kSuperseded, kPending, kFailed };
const char* to_string(TraceStatus s);

struct TraceEvidence {
  EventKey event;
  Tick tick = 0;
  TraceStatus status = TraceStatus::kPending;
  std::optional<Tick> seen_at;  // observation tick of the first frame showing it

  friend bool operator==(const TraceEvidence&, const TraceEvidence&) = default;
};

struct TraceReport {
  AgentId agent;
  bool intact = true;
  std::vector<TraceEvidence> evidence;  // one entry per event sent, in send order

  std::size_t count(TraceStatus s) const;
  friend bool operator==(const TraceReport&, const TraceReport&) = default;
};

/// Streaming self-trace audit. Feed records in log order; reports can be
/// taken at any point (live badges) or after finish() (offline audit).
///
/// An event (t, seq, payload) is satisfied by a FrameObserved of its author at
/// tick t' in (t, t+W] whose cell at the author's position carries exactly
/// that stamp and payload. It is superseded when the author sends again
/// before observing any frame newer than t. It fails once t+W has passed
/// unsatisfied; it stays pending if the author leaves or the log ends first.
class SelfTraceTracker {
 public:
  explicit SelfTraceTracker(Tick window);

  void observe(const Record& r);
  /// Fails every open event whose window closed before `now`.
  void advance(Tick now);
  /// Closes the log at `last_tick`: windows ending by then are judged.
  void finish(Tick last_tick);

  bool knows(const AgentId& agent) const { return agents_.contains(agent); }
  TraceReport report(const AgentId& agent) const;
  /// Agents with at least one EventSent.
  std::vector<AgentId> senders() const;
  std::vector<AgentId> agents() const;

 private:
  struct Open {
    std::size_t index;  // into evidence
    Stamp stamp;
    CellPayload payload;
    bool newer_frame_seen = false;
  };
  struct AgentTrace {
    std::optional<Position> position;
    std::vector<TraceEvidence> evidence;
    std::vector<Open> open;  // ordered by tick
    bool sent = false;
  };

  AgentTrace& agent(const AgentId& id) { return agents_[id]; }

  Tick window_;
  std::map<AgentId, AgentTrace> agents_;
};

/// Throws kUnknownAgent when `agent` never appears in the log.
TraceReport audit_self_trace(const AgentId& agent, const SessionLog& log, Tick window);

struct ClosureResult {
  std::optional<double> score;  // nullopt: nobody sent an event
  std::set<AgentId> alienated;
  std::size_t senders = 0;
  std::map<AgentId, TraceReport> traces;
};

ClosureResult closure_score(const SessionLog& log, Tick window);

struct CriterionA {
  CheckStatus status = CheckStatus::kPass;
  std::size_t joins = 0;
  std::size_t leaves = 0;
  std::set<AgentId> agents;  // named by the evidence
  std::vector<std::string> evidence;
};

/// Joins must be accepted within the admission window, leaves honored with no
/// traffic to or from the agent afterwards, and admitted agents must see
/// themselves (and only admitted agents) in the membership they are shown.
CriterionA check_criterion_a(const SessionLog& log, Tick admission_window = 5);

struct RoleStats {
  std::size_t sent = 0;
  std::size_t delivered = 0;
  std::optional<double> loss_rate;
  std::optional<double> mean_latency;
};

struct CriterionAB {
  CheckStatus status = CheckStatus::kPass;
  std::map<Role, RoleStats> roles;
  std::optional<double> loss_gap;
  std::optional<double> latency_gap;
  std::set<AgentId> disadvantaged;  // members of the roles served worse
  std::vector<std::string> evidence;
  std::vector<std::string> warnings;
};

/// Per-role delivery loss and latency over messages addressed to agents.
CriterionAB check_criterion_ab(const SessionLog& log, double epsilon = 0.05);

struct AuditPoint {
  Tick tick = 0;
  CheckStatus status = CheckStatus::kPass;
  std::vector<AgentId> agents;
  std::vector<std::vector<double>> agreement;  // agents x agents
  double min_agreement = 1.0;
  bool strongly_connected = true;
  /// Outside the largest group of identical views (when agreement fails) or
  /// outside the largest mutually observing component.
  std::vector<AgentId> isolated;
  std::vector<std::string> evidence;
};

struct CriterionABC {
  CheckStatus status = CheckStatus::kPass;
  std::vector<AuditPoint> points;
  std::set<AgentId> isolated;  // over the failing points
  std::vector<std::string> warnings;
};

/// Evaluated at every Quiescent record, or at the end of a log without one.
CriterionABC check_criterion_abc(const SessionLog& log, double theta = 0.99);

/// Fraction of positions (over the union of both frames) holding identical cells.
double frame_agreement(const Frame& a, const Frame& b);

struct LegitimacyReport {
  AuditParams params;
  ClosureResult closure;
  CriterionA criterion_a;
  CriterionAB criterion_ab;
  CriterionABC criterion_abc;
  Verdict overall = Verdict::kInsufficientData;
  /// Union of the closure, access and fairness findings.
  std::set<AgentId> alienated;
  std::vector<std::string> warnings;
};

LegitimacyReport legitimacy_report(const SessionLog& log, const AuditParams& params = {});

nlohmann::json to_json(const LegitimacyReport& report);
nlohmann::json to_json(const TraceReport& report);
/// 0 legitimate, 2 illegitimate, 3 insufficient data.
int exit_code(Verdict v);

}  // namespace poietic
