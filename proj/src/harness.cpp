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

#include "poietic/harness.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>

namespace poietic {

namespace {

using json = nlohmann::json;

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": " + std::strerror(errno));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw std::runtime_error(path.string() + ": " + std::strerror(errno));
}

struct OverSignalPlan {
  std::uint32_t multiplier = 1;
  ActiveWindow window;
};

}  // namespace

EngineOptions engine_options(const ScenarioConfig& cfg, std::uint64_t seed) {
  EngineOptions o;
  o.genesis = cfg.genesis();
  o.peer_graph = cfg.peer_graph;
  o.seed = seed;
  for (std::size_t i = 0; i < cfg.noloops.size(); ++i) {
    NoloopConfig n = cfg.noloops[i];
    n.seed = derive_seed(seed, "noloop:" + std::to_string(i)) ^ n.seed;
    o.noloops.push_back(std::move(n));
  }
  return o;
}

RunResult run_scenario(const ScenarioConfig& input, const RunOptions& options) {
  ScenarioConfig cfg = input;
  if (options.seed) cfg.seed = *options.seed;
  require_valid(cfg);

  RunResult out;
  out.config = cfg;
  out.roster = cfg.roster();
  RunMetrics& m = out.metrics;

  RecordSink sink = [&](Record r) {
    if (const auto* x = std::get_if<rec::EventSent>(&r)) {
      ++m.events_sent[x->event.agent];
    } else if (std::holds_alternative<rec::MessageSent>(r)) {
      ++m.messages_sent;
    } else if (std::holds_alternative<rec::Delivery>(r)) {
      ++m.messages_delivered;
    } else if (std::holds_alternative<rec::Rejected>(r)) {
      ++m.rejected;
    } else if (const auto* x = std::get_if<rec::GroundTruth>(&r)) {
      m.interceptions += x->record.alters();
    }
    if (options.tee) options.tee(r);
    out.log.records.push_back(std::move(r));
  };

  auto engine = Engine::create(engine_options(cfg, cfg.seed), sink);
  sink(engine->genesis_record());

  std::map<AgentId, OverSignalPlan> flood;
  for (const NoloopConfig& n : cfg.noloops) {
    if (const auto* k = std::get_if<OverSignal>(&n.kind))
      flood[k->target] = OverSignalPlan{k->multiplier, n.window};
  }

  struct Agent {
    const AgentSpec* spec;
    Rng rng;
    Seq seq = 0;
    bool member = false;
  };
  std::vector<Agent> agents;
  agents.reserve(out.roster.size());
  for (const AgentSpec& a : out.roster) {
    agents.push_back(Agent{&a, Rng(derive_seed(cfg.seed, "policy:" + a.id.str())), 0, false});
  }
  for (const Agent& a : agents) m.events_sent[a.spec->id];

  auto membership = [&](Tick t) {
    for (Agent& a : agents) {
      if (a.member && a.spec->leave_tick == t) a.member = !engine->leave(a.spec->id, t);
    }
    for (Agent& a : agents) {
      if (a.spec->join_tick == t) a.member = engine->join(a.spec->id, a.spec->role, t).accepted;
    }
  };
  auto record_row = [&](Tick t) {
    const std::size_t views = engine->distinct_views();
    m.convergence.push_back(ConvergenceRow{t, views, engine->quiescent()});
  };

  for (Tick t = 0; t <= cfg.duration; ++t) {
    membership(t);
    if (cfg.duration == 0) break;
    engine->observe(t);
    record_row(t);
    if (t >= 1) {
      for (Agent& a : agents) {
        if (!a.member) continue;
        std::uint32_t reps = 1;
        if (auto f = flood.find(a.spec->id); f != flood.end() && f->second.window.contains(t)) {
          reps = f->second.multiplier;
        }
        for (std::uint32_t r = 0; r < reps; ++r) {
          const auto obs = engine->view(a.spec->id);
          for (const Event& e :
               agent_policy_step(a.spec->policy, *obs, a.spec->id, engine->position_of(a.spec->id), a.spec->q,
                                 a.rng, cfg.geometry, t, a.seq + 1)) {
            engine->submit(e, t);
            a.seq = e.seq;
          }
        }
      }
    }
    engine->end_tick(t);
  }
  m.end_tick = cfg.duration;
  if (cfg.duration > 0) {
    for (Tick t = cfg.duration + 1;; ++t) {
      engine->observe(t);
      record_row(t);
      const bool quiet = engine->quiescent();
      if (quiet || t - cfg.duration > cfg.drain) {
        m.converged = quiet;
        m.end_tick = t;
        m.drain_ticks = t - cfg.duration - 1;
        if (quiet && cfg.topology.kind == TopologyKind::kDP) m.convergence_rounds = m.drain_ticks + 1;
        sink(rec::Quiescent{t, quiet, m.drain_ticks});
        break;
      }
      engine->end_tick(t);
    }
  }

  std::map<AgentId, double> quality;
  for (const AgentSpec& a : out.roster) quality[a.id] = a.q;
  out.ess = ess_points(out.log, quality, cfg.duration);
  out.report = legitimacy_report(out.log, cfg.audit);
  return out;
}

DurableRun run_scenario_durable(const ScenarioConfig& cfg, const std::filesystem::path& path, bool resume,
                                const RunOptions& options) {
  DurableRun out;
  SessionLog survived;
  if (resume && std::filesystem::exists(path)) {
    ReplayResult rr = read_log_file(path);
    out.warnings = std::move(rr.warnings);
    survived = std::move(rr.log);
    std::filesystem::resize_file(path, rr.bytes_consumed);
  }
  LogWriter writer(path, !resume);
  writer.prime(survived);
  std::size_t index = 0;
  RunOptions inner = options;
  inner.tee = [&](const Record& r) {
    if (options.tee) options.tee(r);
    if (index < survived.records.size()) {
      if (!(r == survived.records[index])) {
        throw Error(ErrorCode::kCorruptLog,
                    "record " + std::to_string(index) +
                        " of the existing log differs from a re-execution of the scenario");
      }
      ++index;
      return;
    }
    writer.append(r);
  };
  out.result = run_scenario(cfg, inner);
  if (index < survived.records.size()) {
    throw Error(ErrorCode::kCorruptLog, "existing log has more records than the scenario produces");
  }
  out.records_recovered = survived.records.size();
  return out;
}

std::string closure_csv(const ClosureResult& closure) {
  std::string s = "agent,events,satisfied,superseded,pending,failed,verdict,score\n";
  std::size_t tot[5] = {0, 0, 0, 0, 0};
  for (const auto& [id, t] : closure.traces) {
    const std::size_t row[5] = {t.evidence.size(), t.count(TraceStatus::kSatisfied),
                                t.count(TraceStatus::kSuperseded), t.count(TraceStatus::kPending),
                                t.count(TraceStatus::kFailed)};
    s += id.str();
    for (int i = 0; i < 5; ++i) {
      s += "," + std::to_string(row[i]);
      tot[i] += row[i];
    }
    s += std::string(",") + (t.intact ? "intact" : "alienated") + "," + (t.intact ? "1" : "0") + "\n";
  }
  s += "ALL";
  for (std::size_t v : tot) s += "," + std::to_string(v);
  s += std::string(",") + (closure.alienated.empty() ? "intact" : "alienated") + "," +
       (closure.score ? fixed(*closure.score) : std::string("undefined")) + "\n";
  return s;
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
  std::string s = "tick,distinct_views,converged\n";
  for (const ConvergenceRow& r : rows) {
    s += std::to_string(r.tick) + "," + std::to_string(r.distinct_views) + "," + (r.converged ? "1" : "0") +
         "\n";
  }
  return s;
}

json metrics_json(const RunResult& run) {
  const RunMetrics& m = run.metrics;
  json events = json::object();
  for (const auto& [id, n] : m.events_sent) events[id.str()] = n;
  return json{{"seed", run.config.seed},
              {"topology", to_string(run.config.topology.kind)},
              {"agents", run.roster.size()},
              {"events_sent", events},
              {"messages_sent", m.messages_sent},
              {"messages_delivered", m.messages_delivered},
              {"rejected", m.rejected},
              {"interceptions", m.interceptions},
              {"converged", m.converged},
              {"end_tick", m.end_tick},
              {"drain_ticks", m.drain_ticks},
              {"convergence_rounds",
               m.convergence_rounds ? nlohmann::json(*m.convergence_rounds) : nlohmann::json(nullptr)}};
}

void emit_metrics(const RunResult& run, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "session.log", serialize_log(run.log));
  write_file(out_dir / "ess_points.csv", ess_to_csv(run.ess));
  write_file(out_dir / "closure.csv", closure_csv(run.report.closure));
  write_file(out_dir / "convergence.csv", convergence_csv(run.metrics.convergence));
  write_file(out_dir / "metrics.json", metrics_json(run).dump(2) + "\n");
  write_file(out_dir / "report.json", to_json(run.report).dump(2) + "\n");
}

ReplaySummary replay_log(std::string_view bytes) {
  ReplayResult parsed = parse_log(bytes);
  ReplaySummary out;
  out.records = parsed.log.records.size();
  out.bytes_consumed = parsed.bytes_consumed;
  out.warnings = std::move(parsed.warnings);
  out.last_tick = parsed.log.last_tick();
  if (const rec::Genesis* g = parsed.log.genesis()) out.genesis = *g;

  std::set<AgentId> members;
  for (const Record& r : parsed.log.records) {
    ++out.record_types[record_type(r)];
    if (const auto* x = std::get_if<rec::JoinOutcome>(&r)) {
      if (x->accepted) members.insert(x->agent);
    } else if (const auto* x = std::get_if<rec::LeaveOutcome>(&r)) {
      if (x->honored) members.erase(x->agent);
    } else if (const auto* x = std::get_if<rec::FrameObserved>(&r)) {
      if (x->frame) out.views[x->agent] = frame_digest(*x->frame);
    }
  }
  out.members.assign(members.begin(), members.end());
  std::set<Digest> distinct;
  for (const auto& [agent, d] : out.views) {
    if (members.contains(agent)) distinct.insert(d);
  }
  out.distinct_views = distinct.size();
  out.round_trip = serialize_log(parsed.log) == bytes.substr(0, parsed.bytes_consumed);
  return out;
}

json to_json(const ReplaySummary& s) {
  json j;
  j["records"] = s.records;
  j["record_types"] = s.record_types;
  j["last_tick"] = s.last_tick;
  j["bytes_consumed"] = s.bytes_consumed;
  j["round_trip"] = s.round_trip;
  if (s.genesis) {
    j["session"] = s.genesis->session_id;
    j["code"] = s.genesis->code.hex();
    j["topology"] = to_string(s.genesis->topology.kind);
  }
  json members = json::array();
  for (const AgentId& a : s.members) members.push_back(a.str());
  j["members"] = members;
  json views = json::object();
  for (const auto& [agent, d] : s.views) views[agent.str()] = to_hex(d);
  j["views"] = views;
  j["distinct_member_views"] = s.distinct_views;
  j["warnings"] = s.warnings;
  return j;
}

}  // namespace poietic
