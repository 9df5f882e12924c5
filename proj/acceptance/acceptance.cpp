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

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits 0 only
// when every selected criterion passes.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "poietic/harness.hpp"

namespace fs = std::filesystem;
using namespace poietic;

namespace {

// Pinned thresholds and sample sizes.
namespace limits {
constexpr std::uint64_t kClosureSeeds = 100;  // per topology
constexpr std::uint32_t kClosureAgents = 25;
constexpr Tick kClosureTicks = 200;
constexpr double kClosureBudgetSeconds = 60.0;

constexpr std::uint64_t kDetectionSeeds = 100;  // per manipulation
constexpr std::uint32_t kDetectionOperators = 4;
constexpr std::uint32_t kDetectionOrdinary = 12;
constexpr Tick kDetectionTicks = 120;
constexpr double kPipelineBias = 0.3;

constexpr std::uint64_t kProbabilisticRuns = 100;
constexpr std::uint64_t kProbabilisticRequired = 95;
constexpr Tick kProbabilisticWindow = 50;
constexpr double kProbabilisticDrop = 0.5;
constexpr double kProbabilisticEmitRate = 0.5;
constexpr Tick kProbabilisticTicks = 200;

constexpr std::size_t kMergeSets = 300;
constexpr std::size_t kMergeMaxEvents = 5;

constexpr std::uint64_t kEquivalenceScripts = 50;
constexpr std::uint32_t kEquivalenceAgents = 16;
constexpr Tick kEquivalenceTicks = 60;

constexpr std::uint64_t kConvergenceRuns = 100;
constexpr std::uint64_t kConvergenceRequired = 99;
constexpr std::uint32_t kConvergenceNodes = 64;
constexpr std::uint32_t kConvergenceFanout = 3;
constexpr std::uint64_t kConvergenceMaxRounds = 20;
constexpr Tick kConvergenceTicks = 20;

constexpr std::size_t kEssFixtures = 50;  // per shape
constexpr std::size_t kEssFlatFixtures = 20;
constexpr std::size_t kEssPoints = 60;
constexpr double kEssSeparation = 0.2;

constexpr std::size_t kCrashTrials = 20;
}  // namespace limits

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// A simulated run that the replay criterion executes again.
struct Registered {
  std::string label;
  ScenarioConfig cfg;
  std::uint64_t seed = 0;
  Digest log;
  Digest report;
};

struct Context {
  std::vector<Registered> runs;
  std::uint64_t base_seed = 1;
  bool verbose = false;

  std::uint64_t seed(std::uint64_t i) const { return base_seed + i; }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Digest log_digest(const RunResult& run) { return sha256(serialize_log(run.log)); }
Digest report_digest(const RunResult& run) { return sha256(to_json(run.report).dump()); }

void register_run(Context& ctx, const std::string& label, const ScenarioConfig& cfg, std::uint64_t seed,
                  const RunResult& run) {
  ctx.runs.push_back(Registered{label, cfg, seed, log_digest(run), report_digest(run)});
}

RunResult run_registered(Context& ctx, const std::string& label, const ScenarioConfig& cfg,
                         std::uint64_t seed) {
  RunResult run = run_scenario(cfg, RunOptions{seed, {}});
  register_run(ctx, label, cfg, seed, run);
  return run;
}

AgentId agent(std::uint64_t i) { return AgentId("a" + std::to_string(i)); }

ScenarioConfig honest(TopologyKind kind, std::uint32_t agents, Tick duration) {
  ScenarioConfig cfg;
  cfg.session = "acceptance";
  cfg.topology = Topology{kind, 3};
  cfg.duration = duration;
  AgentGroup g;
  g.count = agents;
  cfg.agents = {g};
  return cfg;
}

std::set<AgentId> ground_truth_alienated(const SessionLog& log) {
  std::set<AgentId> out;
  for (const Record& r : log.records) {
    if (const auto* g = std::get_if<rec::GroundTruth>(&r)) {
      if (g->record.alters() && g->record.subject) out.insert(*g->record.subject);
    }
  }
  return out;
}

// Closure soundness ----------------------------------------------------------

Outcome closure_soundness(Context& ctx) {
  double simulated = 0.0, bookkeeping = 0.0;
  std::size_t good = 0, total = 0;
  std::vector<std::string> bad;
  for (TopologyKind kind : {TopologyKind::kTP, TopologyKind::kDP}) {
    const ScenarioConfig cfg = honest(kind, limits::kClosureAgents, limits::kClosureTicks);
    for (std::uint64_t i = 0; i < limits::kClosureSeeds; ++i) {
      // The budget covers simulating and auditing; digesting the log for the
      // replay criterion is timed separately.
      const auto start = std::chrono::steady_clock::now();
      const RunResult run = run_scenario(cfg, RunOptions{ctx.seed(i), {}});
      simulated += seconds_since(start);
      const auto digest_start = std::chrono::steady_clock::now();
      register_run(ctx, "closure", cfg, ctx.seed(i), run);
      bookkeeping += seconds_since(digest_start);
      ++total;
      const auto& r = run.report;
      if (r.closure.score && *r.closure.score == 1.0 && r.overall == Verdict::kLegitimate) {
        ++good;
      } else if (bad.size() < 3) {
        bad.push_back(fmt("%s seed %llu", to_string(kind), static_cast<unsigned long long>(ctx.seed(i))));
      }
    }
  }
  Outcome o;
  o.pass = good == total && simulated < limits::kClosureBudgetSeconds;
  o.detail =
      fmt("%zu/%zu honest runs (25 agents, 200 ticks, TP and DP) legitimate with closure 1.0; simulate "
          "and audit %.1f s (budget %.0f s), log digests for the replay check %.1f s more",
          good, total, simulated, limits::kClosureBudgetSeconds, bookkeeping);
  for (const auto& b : bad) o.detail += "; failed " + b;
  return o;
}

// Deterministic alienation detection -----------------------------------------

struct DetectionCase {
  std::string name;
  std::function<NoloopKind(const AgentId& victim)> make;
  std::function<bool(const LegitimacyReport&, const AgentId& victim)> right_check;
};

Outcome deterministic_detection(Context& ctx) {
  ScenarioConfig base = honest(TopologyKind::kTP, 0, limits::kDetectionTicks);
  AgentGroup ops;
  ops.count = limits::kDetectionOperators;
  ops.role = Role::kOperator;
  AgentGroup rest;
  rest.count = limits::kDetectionOrdinary;
  base.agents = {ops, rest};

  const std::vector<DetectionCase> cases{
      {"drop-to-self", [](const AgentId& v) { return SelectiveDrop{v, DropDirection::kToSelf, 1.0}; },
       [](const LegitimacyReport& r, const AgentId& v) { return r.closure.alienated.contains(v); }},
      {"drop-to-others", [](const AgentId& v) { return SelectiveDrop{v, DropDirection::kToOthers, 1.0}; },
       [](const LegitimacyReport& r, const AgentId&) {
         return r.criterion_abc.status == CheckStatus::kFail;
       }},
      {"lying-frame",
       [](const AgentId& v) { return LyingFrame{{{v, CellPayload::filled(CellGeometry{}, 15)}}, {}}; },
       [](const LegitimacyReport& r, const AgentId& v) { return r.closure.alienated.contains(v); }},
      {"admission-monopoly", [](const AgentId& v) { return AdmissionMonopoly{std::nullopt, {v}}; },
       [](const LegitimacyReport& r, const AgentId& v) {
         return r.criterion_a.status == CheckStatus::kFail && r.criterion_a.agents.contains(v);
       }},
      {"asymmetric-pipeline",
       [](const AgentId&) { return AsymmetricPipeline{Role::kOperator, limits::kPipelineBias}; },
       [](const LegitimacyReport& r, const AgentId&) { return r.criterion_ab.status == CheckStatus::kFail; }},
  };

  Outcome o;
  o.pass = true;
  std::vector<std::string> parts;
  for (const DetectionCase& c : cases) {
    std::size_t caught = 0;
    std::string first_miss;
    for (std::uint64_t i = 0; i < limits::kDetectionSeeds; ++i) {
      const std::uint64_t seed = ctx.seed(i);
      const AgentId victim = agent(limits::kDetectionOperators + 1 + seed % limits::kDetectionOrdinary);
      ScenarioConfig cfg = base;
      cfg.noloops = {NoloopConfig{c.make(victim), {}, 0}};
      const RunResult run = run_registered(ctx, c.name, cfg, seed);
      const LegitimacyReport& r = run.report;
      const bool ok = r.overall == Verdict::kIllegitimate && c.right_check(r, victim) &&
                      r.alienated == ground_truth_alienated(run.log);
      if (ok) {
        ++caught;
      } else if (first_miss.empty()) {
        first_miss = fmt(" (first miss: seed %llu)", static_cast<unsigned long long>(seed));
      }
    }
    o.pass &= caught == limits::kDetectionSeeds;
    parts.push_back(
        fmt("%s %zu/%llu", c.name.c_str(), caught, static_cast<unsigned long long>(limits::kDetectionSeeds)) +
        first_miss);
  }
  o.detail = "illegitimate, matching sub-audit failing and alienated set equal to ground truth: ";
  for (std::size_t i = 0; i < parts.size(); ++i) o.detail += (i ? ", " : "") + parts[i];
  return o;
}

// Probabilistic alienation detection -----------------------------------------

Outcome probabilistic_detection(Context& ctx) {
  const AgentId victim = agent(3);
  ScenarioConfig cfg = honest(TopologyKind::kTP, 25, limits::kProbabilisticTicks);
  cfg.agents[0].policy = RandomPainter{limits::kProbabilisticEmitRate};
  cfg.audit.window = limits::kProbabilisticWindow;
  cfg.noloops = {
      NoloopConfig{SelectiveDrop{victim, DropDirection::kToSelf, limits::kProbabilisticDrop}, {}, 0}};

  std::uint64_t flagged = 0;
  double rate_sum = 0.0;
  std::vector<Tick> evidence_ticks;
  for (std::uint64_t i = 0; i < limits::kProbabilisticRuns; ++i) {
    const RunResult run = run_registered(ctx, "probabilistic", cfg, ctx.seed(i));
    const auto sent = run.metrics.events_sent.find(victim);
    rate_sum += sent == run.metrics.events_sent.end()
                    ? 0.0
                    : static_cast<double>(sent->second) / static_cast<double>(cfg.duration);
    const auto trace = run.report.closure.traces.find(victim);
    if (trace == run.report.closure.traces.end()) continue;
    std::optional<Tick> first_failed;
    for (const TraceEvidence& e : trace->second.evidence) {
      if (e.status == TraceStatus::kFailed) {
        first_failed = e.tick;
        break;
      }
    }
    // The ban is active from tick 0, so an alienated event sent by tick W
    // means the manipulation was caught inside the first window.
    if (first_failed && *first_failed <= limits::kProbabilisticWindow &&
        run.report.overall == Verdict::kIllegitimate && run.report.alienated.contains(victim)) {
      ++flagged;
      evidence_ticks.push_back(*first_failed);
    }
  }
  std::sort(evidence_ticks.begin(), evidence_ticks.end());
  const Tick median = evidence_ticks.empty() ? 0 : evidence_ticks[evidence_ticks.size() / 2];
  Outcome o;
  o.pass = flagged >= limits::kProbabilisticRequired;
  o.detail = fmt(
      "%llu/%llu runs flag the victim from an event sent within W=%llu ticks (need %llu); victim "
      "emitted %.3f events/tick, median first failing event at tick %llu",
      static_cast<unsigned long long>(flagged), static_cast<unsigned long long>(limits::kProbabilisticRuns),
      static_cast<unsigned long long>(limits::kProbabilisticWindow),
      static_cast<unsigned long long>(limits::kProbabilisticRequired),
      rate_sum / static_cast<double>(limits::kProbabilisticRuns), static_cast<unsigned long long>(median));
  return o;
}

// Merge confluence -------------------------------------------------------------

/// Reference result: each agent's cell holds its event with the greatest
/// (tick, seq). Stamps are distinct per agent, so no tie rule is involved.
std::map<AgentId, const Event*> newest_per_agent(const std::vector<Event>& events) {
  std::map<AgentId, const Event*> best;
  for (const Event& e : events) {
    auto [it, fresh] = best.try_emplace(e.agent, &e);
    if (!fresh && e.stamp() > it->second->stamp()) {
      it->second = &e;
    }
  }
  return best;
}

Outcome merge_confluence(Context& ctx) {
  Rng rng(derive_seed(ctx.base_seed, "merge"));
  const CellGeometry g{};
  std::size_t orderings = 0, violations = 0, oracle_mismatches = 0;
  for (std::size_t set = 0; set < limits::kMergeSets; ++set) {
    const std::size_t agents = 1 + rng.below(4);
    Canvas base(g);
    for (std::size_t a = 1; a <= agents; ++a) base.add_member(agent(a));
    const std::size_t n = 1 + rng.below(limits::kMergeMaxEvents);
    std::vector<Event> events;
    std::set<std::tuple<AgentId, Tick, Seq>> used;
    while (events.size() < n) {
      const AgentId who = agent(1 + rng.below(agents));
      const Tick t = rng.below(4);
      const Seq s = rng.below(4);
      if (!used.emplace(who, t, s).second) continue;
      std::vector<std::uint8_t> px(g.pixel_count());
      for (auto& p : px) p = static_cast<std::uint8_t>(rng.below(g.palette));
      events.push_back(Event{who, t, s, CellPayload(std::move(px))});
    }

    const auto expected = newest_per_agent(events);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::optional<std::vector<std::uint8_t>> reference;
    do {
      Canvas c = base;
      for (std::size_t i : order) c = apply_event(std::move(c), events[i]);
      ++orderings;
      const auto bytes = serialize(c);
      if (!reference) {
        reference = bytes;
        for (const auto& [who, e] : expected) {
          const Cell* cell = render_frame(c, 0).cell_at(*c.position_of(who));
          if (!cell || cell->payload != e->payload || cell->stamp != e->stamp() || cell->owner != who) {
            ++oracle_mismatches;
          }
        }
        if (c.cells().size() != expected.size()) ++oracle_mismatches;
      } else if (bytes != *reference) {
        ++violations;
      }
    } while (std::next_permutation(order.begin(), order.end()));
  }
  Outcome o;
  o.pass = violations == 0 && oracle_mismatches == 0;
  o.detail =
      fmt("%zu event sets of <= %zu events, %zu orderings: %zu order violations, %zu oracle mismatches",
          limits::kMergeSets, limits::kMergeMaxEvents, orderings, violations, oracle_mismatches);
  return o;
}

// TP/DP equivalence ------------------------------------------------------------

struct FinalViews {
  std::vector<Event> script;
  std::map<AgentId, std::shared_ptr<const Frame>> views;
};

FinalViews final_views(const SessionLog& log) {
  FinalViews out;
  for (const Record& r : log.records) {
    if (const auto* e = std::get_if<rec::EventSent>(&r)) out.script.push_back(e->event);
    if (const auto* f = std::get_if<rec::FrameObserved>(&r)) out.views[f->agent] = f->frame;
  }
  return out;
}

std::vector<std::uint8_t> untimed(const Frame& f) {
  Frame copy = f;
  copy.tick = 0;
  return serialize(copy);
}

Outcome tp_dp_equivalence(Context& ctx) {
  std::size_t identical = 0;
  std::string first_miss;
  for (std::uint64_t i = 0; i < limits::kEquivalenceScripts; ++i) {
    const std::uint64_t seed = ctx.seed(i);
    const RunResult tp = run_registered(
        ctx, "equivalence", honest(TopologyKind::kTP, limits::kEquivalenceAgents, limits::kEquivalenceTicks),
        seed);
    const RunResult dp = run_registered(
        ctx, "equivalence", honest(TopologyKind::kDP, limits::kEquivalenceAgents, limits::kEquivalenceTicks),
        seed);
    const FinalViews a = final_views(tp.log);
    const FinalViews b = final_views(dp.log);
    bool ok = a.script == b.script && !a.script.empty() && dp.metrics.converged && !a.views.empty();
    if (ok) {
      const Frame& server = *a.views.begin()->second;
      const auto reference = untimed(server);
      for (const auto* views : {&a.views, &b.views}) {
        for (const auto& [who, frame] : *views) ok &= untimed(*frame) == reference;
      }
      for (const auto& [who, e] : newest_per_agent(a.script)) {
        const auto pos = server.membership.find(who);
        const Cell* cell = pos == server.membership.end() ? nullptr : server.cell_at(pos->second);
        ok &= cell && cell->payload == e->payload && cell->stamp == e->stamp();
      }
    }
    if (ok) {
      ++identical;
    } else if (first_miss.empty()) {
      first_miss = fmt("; first mismatch at seed %llu", static_cast<unsigned long long>(seed));
    }
  }
  Outcome o;
  o.pass = identical == limits::kEquivalenceScripts;
  o.detail = fmt("%zu/%llu scripts: TP frame, every DP replica and the script's newest-event oracle "
                 "byte-identical",
                 identical, static_cast<unsigned long long>(limits::kEquivalenceScripts)) +
             first_miss;
  return o;
}

// DP convergence ---------------------------------------------------------------

Outcome dp_convergence(Context& ctx) {
  ScenarioConfig cfg = honest(TopologyKind::kDP, limits::kConvergenceNodes, limits::kConvergenceTicks);
  cfg.topology.fanout = limits::kConvergenceFanout;
  cfg.peer_graph = PeerGraph::kComplete;
  std::uint64_t within = 0, worst = 0;
  for (std::uint64_t i = 0; i < limits::kConvergenceRuns; ++i) {
    const RunResult run = run_registered(ctx, "convergence", cfg, ctx.seed(i));
    const auto& rounds = run.metrics.convergence_rounds;
    if (rounds && *rounds <= limits::kConvergenceMaxRounds) ++within;
    worst = std::max<std::uint64_t>(worst, rounds.value_or(~std::uint64_t{0} >> 1));
  }
  Outcome o;
  o.pass = within >= limits::kConvergenceRequired;
  o.detail = fmt(
      "%llu/%llu runs (64 nodes, fanout 3, complete graph) converge within %llu rounds (need %llu); "
      "slowest %llu",
      static_cast<unsigned long long>(within), static_cast<unsigned long long>(limits::kConvergenceRuns),
      static_cast<unsigned long long>(limits::kConvergenceMaxRounds),
      static_cast<unsigned long long>(limits::kConvergenceRequired), static_cast<unsigned long long>(worst));
  return o;
}

// ESS shape classifier ---------------------------------------------------------

enum class Shape { kS, kZ, kFlat };

/// Band means over three equal q ranges, computed independently of the library.
std::array<double, 3> band_means(const std::vector<EssPoint>& pts) {
  std::array<double, 3> sum{}, n{};
  for (const EssPoint& p : pts) {
    const int band = p.q * 3.0 < 1.0 ? 0 : (p.q * 3.0 < 2.0 ? 1 : 2);
    sum[band] += p.y;
    n[band] += 1.0;
  }
  return {sum[0] / n[0], sum[1] / n[1], sum[2] / n[2]};
}

std::vector<EssPoint> ess_fixture(Shape shape, Rng& rng) {
  for (;;) {
    double m1, m2, m3;
    if (shape == Shape::kFlat) {
      m1 = m2 = m3 = 0.1 + 0.8 * rng.uniform();
    } else {
      // The odd band sits at least 0.3 away from both others before noise.
      const double extreme = shape == Shape::kS ? 0.5 + 0.45 * rng.uniform() : 0.05 + 0.45 * rng.uniform();
      auto other = [&] {
        return shape == Shape::kS ? 0.02 + (extreme - 0.32) * rng.uniform()
                                  : extreme + 0.3 + (0.98 - extreme - 0.3) * rng.uniform();
      };
      m2 = extreme;
      m1 = other();
      m3 = other();
    }
    std::vector<EssPoint> pts;
    for (std::size_t i = 0; i < limits::kEssPoints; ++i) {
      const double q = static_cast<double>(i) / static_cast<double>(limits::kEssPoints - 1);
      const double m = q * 3.0 < 1.0 ? m1 : (q * 3.0 < 2.0 ? m2 : m3);
      const double noise = shape == Shape::kFlat ? 0.0 : 0.1 * (rng.uniform() - 0.5);
      pts.push_back(EssPoint{agent(i + 1), q, std::clamp(m + noise, 0.0, 1.0)});
    }
    const auto b = band_means(pts);
    const bool premise =
        shape == Shape::kFlat || (shape == Shape::kS ? b[1] - std::max(b[0], b[2]) >= limits::kEssSeparation
                                                     : std::min(b[0], b[2]) - b[1] >= limits::kEssSeparation);
    if (premise) return pts;
  }
}

Outcome ess_classifier(Context& ctx) {
  Rng rng(derive_seed(ctx.base_seed, "ess"));
  std::size_t s_ok = 0, z_ok = 0, flat_ok = 0;
  for (std::size_t i = 0; i < limits::kEssFixtures; ++i) {
    s_ok += classify_ess_shape(ess_fixture(Shape::kS, rng)) == ShapeLabel::kS;
    z_ok += classify_ess_shape(ess_fixture(Shape::kZ, rng)) == ShapeLabel::kZ;
  }
  for (std::size_t i = 0; i < limits::kEssFlatFixtures; ++i) {
    flat_ok += classify_ess_shape(ess_fixture(Shape::kFlat, rng)) == ShapeLabel::kIndeterminate;
  }
  Outcome o;
  o.pass =
      s_ok == limits::kEssFixtures && z_ok == limits::kEssFixtures && flat_ok == limits::kEssFlatFixtures;
  o.detail = fmt("S %zu/%zu, Z %zu/%zu (tertile means separated by >= %.1f), flat -> indeterminate %zu/%zu",
                 s_ok, limits::kEssFixtures, z_ok, limits::kEssFixtures, limits::kEssSeparation, flat_ok,
                 limits::kEssFlatFixtures);
  return o;
}

// Replay determinism -----------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct CrashTally {
  std::size_t trials = 0, ok = 0;
};

/// Cuts a durable run's log at a random byte, resumes it and checks that the
/// final bytes and report match and only the torn tick was redone.
bool crash_and_replay(const ScenarioConfig& cfg, std::uint64_t seed, const fs::path& dir, Rng& rng) {
  const fs::path full = dir / "full.log";
  const DurableRun whole = run_scenario_durable(cfg, full, false, RunOptions{seed, {}});
  const std::string bytes = slurp(full);
  if (bytes.size() < 2) return false;
  const std::size_t cut = 1 + static_cast<std::size_t>(rng.below(bytes.size() - 1));
  const fs::path crashed = dir / "crashed.log";
  std::ofstream(crashed, std::ios::binary | std::ios::trunc) << bytes.substr(0, cut);
  const ReplayResult survived = read_log_file(crashed);
  const DurableRun resumed = run_scenario_durable(cfg, crashed, true, RunOptions{seed, {}});

  bool ok = slurp(crashed) == bytes &&
            to_json(resumed.result.report).dump() == to_json(whole.result.report).dump() &&
            resumed.records_recovered == survived.log.records.size();
  if (!survived.log.empty() && survived.log.records.size() < whole.result.log.records.size()) {
    const Tick torn = record_tick(whole.result.log.records[survived.log.records.size()]);
    ok &= torn <= survived.log.last_tick() + 1;
  }
  return ok;
}

Outcome replay_determinism(Context& ctx) {
  std::size_t identical = 0;
  std::string first_miss;
  for (const Registered& r : ctx.runs) {
    const RunResult again = run_scenario(r.cfg, RunOptions{r.seed, {}});
    if (log_digest(again) == r.log && report_digest(again) == r.report) {
      ++identical;
    } else if (first_miss.empty()) {
      first_miss =
          fmt("; first mismatch: %s seed %llu", r.label.c_str(), static_cast<unsigned long long>(r.seed));
    }
  }

  const fs::path dir = fs::temp_directory_path() / ("poietic_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  Rng rng(derive_seed(ctx.base_seed, "crash"));
  CrashTally crashes;
  if (!ctx.runs.empty()) {
    for (std::size_t i = 0; i < limits::kCrashTrials; ++i) {
      const Registered& r = ctx.runs[rng.below(ctx.runs.size())];
      ++crashes.trials;
      crashes.ok += crash_and_replay(r.cfg, r.seed, dir, rng);
    }
  }
  std::error_code ec;
  fs::remove_all(dir, ec);

  Outcome o;
  o.pass = !ctx.runs.empty() && identical == ctx.runs.size() && crashes.ok == crashes.trials;
  o.detail = fmt("%zu/%zu reruns byte-identical (logs and reports); crash at a random byte then resume: "
                 "%zu/%zu identical, losing at most the in-flight tick",
                 identical, ctx.runs.size(), crashes.ok, crashes.trials) +
             first_miss;
  if (ctx.runs.empty()) o.detail = "no scenarios were run before this criterion";
  return o;
}

struct Criterion {
  const char* name;
  Outcome (*run)(Context&);
};

constexpr Criterion kCriteria[] = {
    {"closure-soundness", closure_soundness},
    {"deterministic-detection", deterministic_detection},
    {"probabilistic-detection", probabilistic_detection},
    {"merge-confluence", merge_confluence},
    {"tp-dp-equivalence", tp_dp_equivalence},
    {"dp-convergence", dp_convergence},
    {"ess-classifier", ess_classifier},
    {"replay-determinism", replay_determinism},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance gate: one PASS/FAIL line per criterion."};
  std::vector<std::string> only;
  Context ctx;
  bool list = false;
  app.add_option("--only", only, "Run just these criteria (replay-determinism reruns what ran before it)");
  app.add_option("--base-seed", ctx.base_seed, "First seed of every seeded series")->capture_default_str();
  app.add_flag("--list", list, "List criterion names");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const Criterion& c : kCriteria) std::cout << c.name << "\n";
    return 0;
  }
  for (const std::string& name : only) {
    if (std::none_of(std::begin(kCriteria), std::end(kCriteria),
                     [&](const Criterion& c) { return name == c.name; })) {
      std::cerr << "unknown criterion '" << name << "' (see --list)\n";
      return 1;
    }
  }

  std::size_t ran = 0, passed = 0;
  for (const Criterion& c : kCriteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = Outcome{false, std::string("error: ") + e.what()};
    }
    ++ran;
    passed += o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail
              << fmt(" [%.1f s]", seconds_since(start)) << std::endl;
  }
  std::cout << passed << "/" << ran << " criteria passed" << std::endl;
  return passed == ran ? 0 : 1;
}
