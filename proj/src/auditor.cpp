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

#include "poietic/auditor.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace poietic {

namespace {

using json = nlohmann::json;

std::string at_tick(Tick t) { return " at tick " + std::to_string(t); }

std::string pos_str(const Position& p) {
  return "(" + std::to_string(p.row) + "," + std::to_string(p.col) + ")";
}

// Membership in the largest strongly connected component of a small digraph
// given as adjacency sets over 0..n-1. Ties go to the component holding the
// lowest vertex.
std::vector<bool> largest_component(const std::vector<std::set<std::size_t>>& adj) {
  const std::size_t n = adj.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack{s};
    reach[s][s] = true;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w : adj[v]) {
        if (!reach[s][w]) {
          reach[s][w] = true;
          stack.push_back(w);
        }
      }
    }
  }
  std::vector<bool> best(n, false);
  std::size_t best_size = 0;
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<bool> comp(n, false);
    std::size_t size = 0;
    for (std::size_t w = 0; w < n; ++w) {
      if (reach[v][w] && reach[w][v]) {
        comp[w] = true;
        ++size;
      }
    }
    if (size > best_size) {
      best = std::move(comp);
      best_size = size;
    }
  }
  return best;
}

json opt_num(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void AuditParams::validate() const {
  if (window < 1) throw Error(ErrorCode::kInvalidConfig, "audit window must be >= 1");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "epsilon must be >= 0");
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "theta must be in [0,1]");
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kLegitimate:
      return "legitimate";
    case Verdict::kIllegitimate:
      return "illegitimate";
    case Verdict::kInsufficientData:
      return "insufficient_data";
  }
  return "?";
}

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::kPass:
      return "pass";
    case CheckStatus::kFail:
      return "fail";
    case CheckStatus::kInsufficientData:
      return "insufficient_data";
  }
  return "?";
}

const char* to_string(TraceStatus s) {
  switch (s) {
    case TraceStatus::kSatisfied:
      return "satisfied";
    case TraceStatus::kSuperseded:
      return "superseded";
    case TraceStatus::kPending:
      return "pending";
    case TraceStatus::kFailed:
      return "failed";
  }
  return "?";
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::kLegitimate:
      return 0;
    case Verdict::kIllegitimate:
      return 2;
    case Verdict::kInsufficientData:
      return 3;
  }
  return 3;
}

std::size_t TraceReport::count(TraceStatus s) const {
  return static_cast<std::size_t>(
      std::count_if(evidence.begin(), evidence.end(), [s](const TraceEvidence& e) { return e.status == s; }));
}

// ---------------------------------------------------------------------------
// Self-trace

SelfTraceTracker::SelfTraceTracker(Tick window) : window_(window) {
  if (window_ < 1) throw Error(ErrorCode::kInvalidConfig, "audit window must be >= 1");
}

void SelfTraceTracker::advance(Tick now) {
  for (auto& [id, a] : agents_) {
    std::erase_if(a.open, [&](const Open& o) {
      if (o.stamp.tick + window_ >= now) return false;
      a.evidence[o.index].status = TraceStatus::kFailed;
      return true;
    });
  }
}

void SelfTraceTracker::finish(Tick last_tick) { advance(last_tick + 1); }

void SelfTraceTracker::observe(const Record& r) {
  if (std::holds_alternative<rec::GroundTruth>(r)) return;
  advance(record_tick(r));
  if (const auto* x = std::get_if<rec::JoinRequest>(&r)) {
    agent(x->agent);
  } else if (const auto* x = std::get_if<rec::JoinOutcome>(&r)) {
    if (x->accepted && x->position) agent(x->agent).position = x->position;
  } else if (const auto* x = std::get_if<rec::LeaveRequest>(&r)) {
    AgentTrace& a = agent(x->agent);
    a.open.clear();  // left before the window closed: unjudged
  } else if (const auto* x = std::get_if<rec::EventSent>(&r)) {
    AgentTrace& a = agent(x->event.agent);
    a.sent = true;
    std::erase_if(a.open, [&](const Open& o) {
      if (o.newer_frame_seen) return false;
      a.evidence[o.index].status = TraceStatus::kSuperseded;
      return true;
    });
    a.evidence.push_back(TraceEvidence{x->event.key(), x->event.tick, TraceStatus::kPending, std::nullopt});
    a.open.push_back(Open{a.evidence.size() - 1, x->event.stamp(), x->event.payload, false});
  } else if (const auto* x = std::get_if<rec::FrameObserved>(&r)) {
    AgentTrace& a = agent(x->agent);
    if (a.open.empty()) return;
    const Cell* cell = a.position && x->frame ? x->frame->cell_at(*a.position) : nullptr;
    std::erase_if(a.open, [&](Open& o) {
      if (x->tick <= o.stamp.tick) return false;
      o.newer_frame_seen = true;
      if (!cell || cell->owner != x->agent || cell->stamp != o.stamp || cell->payload != o.payload) {
        return false;
      }
      a.evidence[o.index].status = TraceStatus::kSatisfied;
      a.evidence[o.index].seen_at = x->tick;
      return true;
    });
  }
}

TraceReport SelfTraceTracker::report(const AgentId& id) const {
  TraceReport out;
  out.agent = id;
  auto it = agents_.find(id);
  if (it == agents_.end()) return out;
  out.evidence = it->second.evidence;
  out.intact = std::none_of(out.evidence.begin(), out.evidence.end(),
                            [](const TraceEvidence& e) { return e.status == TraceStatus::kFailed; });
  return out;
}

std::vector<AgentId> SelfTraceTracker::senders() const {
  std::vector<AgentId> out;
  for (const auto& [id, a] : agents_) {
    if (a.sent) out.push_back(id);
  }
  return out;
}

std::vector<AgentId> SelfTraceTracker::agents() const {
  std::vector<AgentId> out;
  for (const auto& [id, a] : agents_) out.push_back(id);
  return out;
}

namespace {

SelfTraceTracker run_tracker(const SessionLog& log, Tick window) {
  SelfTraceTracker tracker(window);
  for (const Record& r : log.records) tracker.observe(r);
  tracker.finish(log.last_tick());
  return tracker;
}

}  // namespace

TraceReport audit_self_trace(const AgentId& agent, const SessionLog& log, Tick window) {
  SelfTraceTracker tracker = run_tracker(log, window);
  if (!tracker.knows(agent)) {
    throw Error(ErrorCode::kUnknownAgent, "agent '" + agent.str() + "' does not appear in the log");
  }
  return tracker.report(agent);
}

ClosureResult closure_score(const SessionLog& log, Tick window) {
  SelfTraceTracker tracker = run_tracker(log, window);
  ClosureResult out;
  std::size_t intact = 0;
  for (const AgentId& id : tracker.senders()) {
    TraceReport rep = tracker.report(id);
    ++out.senders;
    if (rep.intact) {
      ++intact;
    } else {
      out.alienated.insert(id);
    }
    out.traces.emplace(id, std::move(rep));
  }
  if (out.senders > 0) out.score = static_cast<double>(intact) / static_cast<double>(out.senders);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion A

CriterionA check_criterion_a(const SessionLog& log, Tick admission_window) {
  CriterionA out;
  std::map<AgentId, Tick> join_requests;   // awaiting outcome
  std::map<AgentId, Tick> leave_requests;  // awaiting outcome
  std::map<AgentId, Position> members;     // admitted and not departed
  std::map<AgentId, Tick> member_since;
  std::set<AgentId> ever_admitted;
  std::map<AgentId, Tick> departed_at;  // honored leave, not rejoined
  std::set<AgentId> reported_self, reported_phantom, reported_traffic;

  const Tick last = log.last_tick();
  for (const Record& r : log.records) {
    if (const auto* x = std::get_if<rec::JoinRequest>(&r)) {
      ++out.joins;
      join_requests[x->agent] = x->tick;
    } else if (const auto* x = std::get_if<rec::JoinOutcome>(&r)) {
      auto req = join_requests.find(x->agent);
      const Tick asked = req != join_requests.end() ? req->second : x->tick;
      if (req != join_requests.end()) join_requests.erase(req);
      if (!x->accepted) {
        out.agents.insert(x->agent);
        out.evidence.push_back("join of " + x->agent.str() + " requested" + at_tick(asked) + " refused" +
                               at_tick(x->tick) + (x->reason.empty() ? "" : ": " + x->reason));
      } else {
        if (x->tick - asked > admission_window) {
          out.agents.insert(x->agent);
          out.evidence.push_back("join of " + x->agent.str() + " requested" + at_tick(asked) +
                                 " accepted late" + at_tick(x->tick));
        }
        if (x->position) members[x->agent] = *x->position;
        member_since[x->agent] = x->tick;
        ever_admitted.insert(x->agent);
        departed_at.erase(x->agent);
      }
    } else if (const auto* x = std::get_if<rec::LeaveRequest>(&r)) {
      ++out.leaves;
      leave_requests[x->agent] = x->tick;
    } else if (const auto* x = std::get_if<rec::LeaveOutcome>(&r)) {
      auto req = leave_requests.find(x->agent);
      const Tick asked = req != leave_requests.end() ? req->second : x->tick;
      if (req != leave_requests.end()) leave_requests.erase(req);
      if (!x->honored) {
        out.agents.insert(x->agent);
        out.evidence.push_back("leave of " + x->agent.str() + " requested" + at_tick(asked) + " not honored");
      } else {
        if (x->tick - asked > admission_window) {
          out.agents.insert(x->agent);
          out.evidence.push_back("leave of " + x->agent.str() + " requested" + at_tick(asked) +
                                 " honored late" + at_tick(x->tick));
        }
        members.erase(x->agent);
        member_since.erase(x->agent);
        departed_at[x->agent] = x->tick;
      }
    } else if (const auto* x = std::get_if<rec::Delivery>(&r)) {
      for (const NodeId* n : {&x->to, &x->from}) {
        auto d = departed_at.find(*n);
        if (d != departed_at.end() && x->tick > d->second && !reported_traffic.contains(*n)) {
          reported_traffic.insert(*n);
          out.agents.insert(*n);
          out.evidence.push_back("delivery " + std::to_string(x->id) + " " + x->from.str() + "->" +
                                 x->to.str() + at_tick(x->tick) + " after " + n->str() + " left" +
                                 at_tick(d->second));
        }
      }
    } else if (const auto* x = std::get_if<rec::FrameObserved>(&r)) {
      if (!x->frame) continue;
      auto self = members.find(x->agent);
      if (self != members.end() && member_since[x->agent] < x->tick && !reported_self.contains(x->agent)) {
        auto shown = x->frame->membership.find(x->agent);
        if (shown == x->frame->membership.end() || shown->second != self->second) {
          reported_self.insert(x->agent);
          out.agents.insert(x->agent);
          out.evidence.push_back(
              x->agent.str() + " admitted at " + pos_str(self->second) + " but shown " +
              (shown == x->frame->membership.end() ? std::string("absent") : "at " + pos_str(shown->second)) +
              " in its frame" + at_tick(x->tick));
        }
      }
      for (const auto& [m, pos] : x->frame->membership) {
        if (!ever_admitted.contains(m) && !reported_phantom.contains(m)) {
          reported_phantom.insert(m);
          out.evidence.push_back("unadmitted member " + m.str() + " shown to " + x->agent.str() +
                                 at_tick(x->tick));
        }
      }
    }
  }
  for (const auto& [agent, asked] : join_requests) {
    if (last - asked > admission_window) {
      out.agents.insert(agent);
      out.evidence.push_back("join of " + agent.str() + " requested" + at_tick(asked) + " never answered");
    }
  }
  for (const auto& [agent, asked] : leave_requests) {
    if (last - asked > admission_window) {
      out.agents.insert(agent);
      out.evidence.push_back("leave of " + agent.str() + " requested" + at_tick(asked) + " never answered");
    }
  }
  out.status = out.evidence.empty() ? CheckStatus::kPass : CheckStatus::kFail;
  return out;
}

// ---------------------------------------------------------------------------
// Criterion AB

CriterionAB check_criterion_ab(const SessionLog& log, double epsilon) {
  CriterionAB out;
  std::map<AgentId, Role> roles;
  std::map<AgentId, std::vector<Tick>> leaves;
  struct Sent {
    Tick tick;
    AgentId to;
  };
  std::map<std::uint64_t, Sent> sent;
  std::map<std::uint64_t, Tick> delivered;
  for (const Record& r : log.records) {
    if (const auto* x = std::get_if<rec::JoinRequest>(&r)) {
      roles[x->agent] = x->role;
    } else if (const auto* x = std::get_if<rec::LeaveRequest>(&r)) {
      leaves[x->agent].push_back(x->tick);
    } else if (const auto* x = std::get_if<rec::MessageSent>(&r)) {
      if (x->id != 0) sent.emplace(x->id, Sent{x->tick, x->to});
    } else if (const auto* x = std::get_if<rec::Delivery>(&r)) {
      if (x->id != 0) delivered.emplace(x->id, x->tick);
    }
  }
  std::set<Role> present;
  for (const auto& [a, role] : roles) present.insert(role);
  for (Role role : present) out.roles[role];

  const Tick last = log.last_tick();
  std::map<Role, double> latency_sum;
  for (const auto& [id, s] : sent) {
    auto role = roles.find(s.to);
    if (role == roles.end()) continue;  // server-bound traffic
    if (s.tick >= last) continue;       // could not have arrived yet
    auto d = delivered.find(id);
    if (d == delivered.end()) {
      const auto& lv = leaves[s.to];
      if (std::any_of(lv.begin(), lv.end(), [&](Tick t) { return t >= s.tick; })) continue;
    }
    RoleStats& st = out.roles[role->second];
    ++st.sent;
    if (d != delivered.end()) {
      ++st.delivered;
      latency_sum[role->second] += static_cast<double>(d->second - s.tick);
    }
  }
  for (auto& [role, st] : out.roles) {
    if (st.sent > 0) st.loss_rate = 1.0 - static_cast<double>(st.delivered) / static_cast<double>(st.sent);
    if (st.delivered > 0) st.mean_latency = latency_sum[role] / static_cast<double>(st.delivered);
  }

  if (present.size() < 2) {
    out.warnings.push_back(present.empty() ? "no agents joined; criterion AB holds vacuously"
                                           : "single-role session; criterion AB holds vacuously");
    out.status = CheckStatus::kPass;
    return out;
  }
  for (const auto& [role, st] : out.roles) {
    if (st.sent == 0) {
      out.warnings.push_back(std::string("no messages addressed to role ") + to_string(role));
      out.status = CheckStatus::kInsufficientData;
      return out;
    }
  }
  auto spread = [&](auto get) -> std::optional<double> {
    std::optional<double> lo, hi;
    for (const auto& [role, st] : out.roles) {
      const std::optional<double> v = get(st);
      if (!v) return std::nullopt;
      lo = lo ? std::min(*lo, *v) : *v;
      hi = hi ? std::max(*hi, *v) : *v;
    }
    return *hi - *lo;
  };
  out.loss_gap = spread([](const RoleStats& s) { return s.loss_rate; });
  out.latency_gap = spread([](const RoleStats& s) { return s.mean_latency; });

  auto describe = [&](const char* what, auto get) {
    std::ostringstream os;
    os << what << " gap exceeds " << epsilon << ":";
    for (const auto& [role, st] : out.roles) {
      const std::optional<double> v = get(st);
      os << " " << to_string(role) << "=" << (v ? std::to_string(*v) : std::string("n/a"));
    }
    return os.str();
  };
  std::set<Role> behind;
  auto lagging = [&](auto get) {
    double best = 0.0;
    bool first = true;
    for (const auto& [role, st] : out.roles) {
      best = first ? *get(st) : std::min(best, *get(st));
      first = false;
    }
    for (const auto& [role, st] : out.roles) {
      if (*get(st) > best + epsilon) behind.insert(role);
    }
  };
  if (out.loss_gap && *out.loss_gap > epsilon) {
    out.evidence.push_back(describe("loss-rate", [](const RoleStats& s) { return s.loss_rate; }));
    lagging([](const RoleStats& s) { return s.loss_rate; });
  }
  if (out.latency_gap && *out.latency_gap > epsilon) {
    out.evidence.push_back(describe("latency", [](const RoleStats& s) { return s.mean_latency; }));
    lagging([](const RoleStats& s) { return s.mean_latency; });
  }
  for (const auto& [agent, role] : roles) {
    if (behind.contains(role)) out.disadvantaged.insert(agent);
  }
  if (!out.evidence.empty()) {
    out.status = CheckStatus::kFail;
  } else if (!out.latency_gap) {
    out.warnings.push_back("a role received no deliveries; latency not comparable");
    out.status = CheckStatus::kInsufficientData;
  } else {
    out.status = CheckStatus::kPass;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criterion ABC

double frame_agreement(const Frame& a, const Frame& b) {
  std::set<Position> positions;
  for (const auto& [p, c] : a.cells) positions.insert(p);
  for (const auto& [p, c] : b.cells) positions.insert(p);
  if (positions.empty()) return 1.0;
  std::size_t same = 0;
  for (const Position& p : positions) {
    const Cell* ca = a.cell_at(p);
    const Cell* cb = b.cell_at(p);
    if (ca && cb && *ca == *cb) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(positions.size());
}

namespace {

struct AbcState {
  std::set<AgentId> members;
  std::set<AgentId> senders;
  std::map<AgentId, std::shared_ptr<const Frame>> last_frame;
  std::map<AgentId, std::map<AgentId, Stamp>> seen_stamp;  // observer -> owner -> stamp
  std::map<AgentId, std::set<AgentId>> saw_change;         // observer -> owners

  void observe(const rec::FrameObserved& x) {
    if (!x.frame) return;
    last_frame[x.agent] = x.frame;
    auto& seen = seen_stamp[x.agent];
    for (const auto& [pos, cell] : x.frame->cells) {
      if (cell.owner == x.agent) continue;
      auto it = seen.find(cell.owner);
      if (it == seen.end() || it->second != cell.stamp) {
        seen[cell.owner] = cell.stamp;
        saw_change[x.agent].insert(cell.owner);
      }
    }
  }

  AuditPoint evaluate(Tick tick, double theta) const {
    AuditPoint p;
    p.tick = tick;
    for (const AgentId& a : members) {
      if (last_frame.contains(a)) p.agents.push_back(a);
    }
    const std::size_t n = p.agents.size();
    if (n < 2) {
      p.status = CheckStatus::kInsufficientData;
      p.evidence.push_back("fewer than two observing members" + at_tick(tick));
      return p;
    }
    p.agreement.assign(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = frame_agreement(*last_frame.at(p.agents[i]), *last_frame.at(p.agents[j]));
        p.agreement[i][j] = p.agreement[j][i] = v;
        if (v < p.min_agreement) p.min_agreement = v;
        if (v < theta) {
          std::ostringstream os;
          os << "agreement(" << p.agents[i].str() << "," << p.agents[j].str() << ")=" << v << " < " << theta;
          p.evidence.push_back(os.str());
        }
      }
    }
    std::vector<AgentId> vertices;
    for (const AgentId& a : p.agents) {
      if (senders.contains(a)) vertices.push_back(a);
    }
    std::vector<std::set<std::size_t>> adj(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      auto it = saw_change.find(vertices[i]);
      if (it == saw_change.end()) continue;
      for (std::size_t j = 0; j < vertices.size(); ++j) {
        if (i != j && it->second.contains(vertices[j])) adj[i].insert(j);
      }
    }
    const std::vector<bool> core = largest_component(adj);
    p.strongly_connected = std::all_of(core.begin(), core.end(), [](bool b) { return b; });
    std::set<AgentId> isolated;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      if (!core[i]) isolated.insert(vertices[i]);
    }
    if (p.min_agreement < theta) {
      // Consensus: the largest group of identical views.
      std::vector<std::size_t> group(n);
      std::map<std::size_t, std::size_t> sizes;
      for (std::size_t i = 0; i < n; ++i) {
        group[i] = i;
        for (std::size_t j = 0; j < i; ++j) {
          if (last_frame.at(p.agents[j])->cells == last_frame.at(p.agents[i])->cells) {
            group[i] = group[j];
            break;
          }
        }
        ++sizes[group[i]];
      }
      std::size_t consensus = 0;
      for (const auto& [g, size] : sizes) {
        if (size > sizes[consensus]) consensus = g;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (p.agreement[i][consensus] < theta) isolated.insert(p.agents[i]);
      }
    }
    p.isolated.assign(isolated.begin(), isolated.end());
    if (!p.strongly_connected) {
      std::size_t missing = 0;
      for (std::size_t i = 0; i < vertices.size(); ++i) missing += vertices.size() - 1 - adj[i].size();
      p.evidence.push_back("mutual-observability graph over " + std::to_string(vertices.size()) +
                           " senders is not strongly connected (" + std::to_string(missing) +
                           " ordered pairs never observed)");
    }
    p.status = (p.min_agreement >= theta && p.strongly_connected) ? CheckStatus::kPass : CheckStatus::kFail;
    return p;
  }
};

}  // namespace

CriterionABC check_criterion_abc(const SessionLog& log, double theta) {
  CriterionABC out;
  AbcState st;
  bool had_quiescent = false;
  for (const Record& r : log.records) {
    if (const auto* x = std::get_if<rec::JoinOutcome>(&r)) {
      if (x->accepted) st.members.insert(x->agent);
    } else if (const auto* x = std::get_if<rec::LeaveOutcome>(&r)) {
      if (x->honored) st.members.erase(x->agent);
    } else if (const auto* x = std::get_if<rec::EventSent>(&r)) {
      st.senders.insert(x->event.agent);
    } else if (const auto* x = std::get_if<rec::FrameObserved>(&r)) {
      st.observe(*x);
    } else if (const auto* x = std::get_if<rec::Quiescent>(&r)) {
      had_quiescent = true;
      if (!x->converged)
        out.warnings.push_back("audit point" + at_tick(x->tick) + " reached without convergence");
      out.points.push_back(st.evaluate(x->tick, theta));
    }
  }
  if (!had_quiescent) {
    out.warnings.push_back("no quiescent record; auditing the end of the log");
    out.points.push_back(st.evaluate(log.last_tick(), theta));
  }
  bool any_insufficient = false;
  out.status = CheckStatus::kPass;
  for (const AuditPoint& p : out.points) {
    if (p.status == CheckStatus::kFail) {
      out.status = CheckStatus::kFail;
      out.isolated.insert(p.isolated.begin(), p.isolated.end());
    }
    any_insufficient |= p.status == CheckStatus::kInsufficientData;
  }
  if (out.status != CheckStatus::kFail && any_insufficient) out.status = CheckStatus::kInsufficientData;
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

LegitimacyReport legitimacy_report(const SessionLog& full, const AuditParams& params) {
  params.validate();
  const SessionLog log = strip_ground_truth(full);
  LegitimacyReport rep;
  rep.params = params;
  rep.closure = closure_score(log, params.window);
  rep.criterion_a = check_criterion_a(log, params.admission_window);
  rep.criterion_ab = check_criterion_ab(log, params.epsilon);
  rep.criterion_abc = check_criterion_abc(log, params.theta);

  for (const auto& w : rep.criterion_ab.warnings) rep.warnings.push_back("criterion_ab: " + w);
  for (const auto& w : rep.criterion_abc.warnings) rep.warnings.push_back("criterion_abc: " + w);
  if (!rep.closure.score) rep.warnings.push_back("closure: no agent sent an event; score undefined");

  const bool closure_fail = rep.closure.score && *rep.closure.score < 1.0;
  const std::array<CheckStatus, 3> checks{rep.criterion_a.status, rep.criterion_ab.status,
                                          rep.criterion_abc.status};
  const bool any_fail =
      closure_fail || std::find(checks.begin(), checks.end(), CheckStatus::kFail) != checks.end();
  const bool any_undefined = !rep.closure.score || std::find(checks.begin(), checks.end(),
                                                             CheckStatus::kInsufficientData) != checks.end();
  rep.overall =
      any_fail ? Verdict::kIllegitimate : (any_undefined ? Verdict::kInsufficientData : Verdict::kLegitimate);
  rep.alienated = rep.closure.alienated;
  rep.alienated.insert(rep.criterion_a.agents.begin(), rep.criterion_a.agents.end());
  rep.alienated.insert(rep.criterion_ab.disadvantaged.begin(), rep.criterion_ab.disadvantaged.end());
  rep.alienated.insert(rep.criterion_abc.isolated.begin(), rep.criterion_abc.isolated.end());
  return rep;
}

json to_json(const TraceReport& report) {
  json failing = json::array();
  for (const TraceEvidence& e : report.evidence) {
    if (e.status != TraceStatus::kFailed) continue;
    failing.push_back(json{{"agent", e.event.agent.str()}, {"seq", e.event.seq}, {"tick", e.tick}});
  }
  return json{{"agent", report.agent.str()},
              {"verdict", report.intact ? "intact" : "alienated"},
              {"events", report.evidence.size()},
              {"satisfied", report.count(TraceStatus::kSatisfied)},
              {"superseded", report.count(TraceStatus::kSuperseded)},
              {"pending", report.count(TraceStatus::kPending)},
              {"failed", report.count(TraceStatus::kFailed)},
              {"failing_events", failing}};
}

json to_json(const LegitimacyReport& r) {
  json traces = json::object();
  for (const auto& [id, t] : r.closure.traces) traces[id.str()] = to_json(t);
  auto names = [](const std::set<AgentId>& agents) {
    json out = json::array();
    for (const AgentId& a : agents) out.push_back(a.str());
    return out;
  };

  json roles = json::object();
  for (const auto& [role, st] : r.criterion_ab.roles) {
    roles[to_string(role)] = json{{"sent", st.sent},
                                  {"delivered", st.delivered},
                                  {"loss_rate", opt_num(st.loss_rate)},
                                  {"mean_latency", opt_num(st.mean_latency)}};
  }
  json points = json::array();
  for (const AuditPoint& p : r.criterion_abc.points) {
    json agents = json::array();
    for (const AgentId& a : p.agents) agents.push_back(a.str());
    points.push_back(json{{"tick", p.tick},
                          {"status", to_string(p.status)},
                          {"agents", agents},
                          {"agreement", p.agreement},
                          {"min_agreement", p.min_agreement},
                          {"strongly_connected", p.strongly_connected},
                          {"isolated", names(std::set<AgentId>(p.isolated.begin(), p.isolated.end()))},
                          {"evidence", p.evidence}});
  }
  return json{
      {"params", json{{"window", r.params.window},
                      {"epsilon", r.params.epsilon},
                      {"theta", r.params.theta},
                      {"admission_window", r.params.admission_window}}},
      {"closure", json{{"score", opt_num(r.closure.score)},
                       {"senders", r.closure.senders},
                       {"alienated", names(r.closure.alienated)},
                       {"traces", traces}}},
      {"criterion_a", json{{"status", to_string(r.criterion_a.status)},
                           {"joins", r.criterion_a.joins},
                           {"leaves", r.criterion_a.leaves},
                           {"agents", names(r.criterion_a.agents)},
                           {"evidence", r.criterion_a.evidence}}},
      {"criterion_ab", json{{"status", to_string(r.criterion_ab.status)},
                            {"roles", roles},
                            {"loss_gap", opt_num(r.criterion_ab.loss_gap)},
                            {"latency_gap", opt_num(r.criterion_ab.latency_gap)},
                            {"disadvantaged", names(r.criterion_ab.disadvantaged)},
                            {"evidence", r.criterion_ab.evidence},
                            {"warnings", r.criterion_ab.warnings}}},
      {"criterion_abc", json{{"status", to_string(r.criterion_abc.status)},
                             {"points", points},
                             {"isolated", names(r.criterion_abc.isolated)},
                             {"warnings", r.criterion_abc.warnings}}},
      {"overall", to_string(r.overall)},
      {"alienated", names(r.alienated)},
      {"warnings", r.warnings},
  };
}

}  // namespace poietic
