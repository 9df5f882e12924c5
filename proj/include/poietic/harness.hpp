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

// Deterministic scenario runner.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "poietic/auditor.hpp"
#include "poietic/engine.hpp"
#include "poietic/ess.hpp"
#include "poietic/scenario.hpp"

namespace poietic {

struct ConvergenceRow {
  Tick tick = 0;
  std::size_t distinct_views = 0;
  bool converged = false;
};

struct RunMetrics {
  std::map<AgentId, std::size_t> events_sent;
  std::size_t messages_sent = 0;
  std::size_t messages_delivered = 0;
  std::size_t rejected = 0;
  std::size_t interceptions = 0;
  std::vector<ConvergenceRow> convergence;
  bool converged = false;
  Tick end_tick = 0;
  Tick drain_ticks = 0;  // policy-free ticks until quiescence (or the cap)
  /// DP only: gossip rounds from the last policy tick until every replica
  /// agreed, counting that tick's own round. Unset when the cap was hit.
  std::optional<std::uint64_t> convergence_rounds;
};

struct RunResult {
  ScenarioConfig config;  // with the effective seed
  std::vector<AgentSpec> roster;
  SessionLog log;  // includes GroundTruth records
  RunMetrics metrics;
  LegitimacyReport report;
  std::vector<EssPoint> ess;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the scenario's seed
  RecordSink tee;                     // sees every record as it is produced
};

/// Engine options for `cfg` under `seed`: each noloop gets a seed derived
/// from the run seed and its own configured seed.
EngineOptions engine_options(const ScenarioConfig& cfg, std::uint64_t seed);

/// Validates `cfg` (all problems at once) and runs it to quiescence.
RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& options = {});

/// Runs with every record appended durably to `path`. With `resume`, the
/// surviving records of an interrupted run are checked against a
/// deterministic re-execution and the remainder is appended.
struct DurableRun {
  RunResult result;
  std::size_t records_recovered = 0;
  std::vector<std::string> warnings;
};
DurableRun run_scenario_durable(const ScenarioConfig& cfg, const std::filesystem::path& path, bool resume,
                                const RunOptions& options = {});

/// Writes session.log, ess_points.csv, closure.csv, convergence.csv,
/// metrics.json and report.json into `out_dir` (created if missing).
void emit_metrics(const RunResult& run, const std::filesystem::path& out_dir);

/// What a log reconstructs to when read back from its bytes.
struct ReplaySummary {
  std::size_t records = 0;
  std::map<std::string, std::size_t> record_types;
  Tick last_tick = 0;
  std::optional<rec::Genesis> genesis;
  std::vector<AgentId> members;  // at the end of the log
  /// Digest of each agent's latest observation.
  std::map<AgentId, Digest> views;
  std::size_t distinct_views = 0;
  /// Re-encoding the parsed records reproduces the consumed bytes exactly.
  bool round_trip = false;
  std::size_t bytes_consumed = 0;
  std::vector<std::string> warnings;
};

/// Parses `bytes` like read_log_file and summarizes the reconstructed state.
ReplaySummary replay_log(std::string_view bytes);
nlohmann::json to_json(const ReplaySummary& summary);

std::string closure_csv(const ClosureResult& closure);
std::string convergence_csv(const std::vector<ConvergenceRow>& rows);
nlohmann::json metrics_json(const RunResult& run);

}  // namespace poietic
