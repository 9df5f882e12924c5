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

// poietic: simulate, audit, replay and serve collective canvas sessions.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "poietic/harness.hpp"
#include "poietic/net.hpp"
#include "poietic/session_service.hpp"

namespace fs = std::filesystem;
using namespace poietic;

namespace {

constexpr int kExitFailure = 1;
constexpr const char* kLogDirEnv = "POIETIC_LOG_DIR";

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
  struct sigaction sa{};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
  std::signal(SIGPIPE, SIG_IGN);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool resume = false;
};

int cmd_run(const RunArgs& a) {
  const ScenarioConfig cfg = load_scenario(a.scenario);
  RunOptions options;
  options.seed = a.seed;
  const fs::path out(a.out);
  fs::create_directories(out);
  RunResult result;
  if (a.resume) {
    DurableRun durable = run_scenario_durable(cfg, out / "session.log", true, options);
    for (const auto& w : durable.warnings) std::cerr << "warning: " << w << "\n";
    if (durable.records_recovered > 0) {
      std::cerr << "resumed after " << durable.records_recovered << " recovered records\n";
    }
    result = std::move(durable.result);
  } else {
    result = run_scenario(cfg, options);
  }
  emit_metrics(result, out);

  const LegitimacyReport& r = result.report;
  std::cout << "session " << result.config.session << " seed " << result.config.seed << " topology "
            << to_string(result.config.topology.kind) << "\n";
  std::size_t events = 0;
  for (const auto& [agent, n] : result.metrics.events_sent) events += n;
  std::cout << "ticks " << result.metrics.end_tick << " events " << events << " records "
            << result.log.records.size() << " converged " << (result.metrics.converged ? "yes" : "no")
            << "\n";
  std::cout << "closure " << (r.closure.score ? fixed(*r.closure.score) : std::string("n/a"))
            << " criterion_a " << to_string(r.criterion_a.status) << " criterion_ab "
            << to_string(r.criterion_ab.status) << " criterion_abc " << to_string(r.criterion_abc.status)
            << "\n";
  std::cout << "verdict " << to_string(r.overall);
  if (!r.alienated.empty()) {
    std::cout << " alienated";
    for (const AgentId& id : r.alienated) std::cout << " " << id.str();
  }
  std::cout << "\nwrote " << out.string() << "\n";
  return 0;
}

struct AuditArgs {
  std::string log;
  AuditParams params;
  std::string report_path;
  bool quiet = false;
};

int cmd_audit(const AuditArgs& a) {
  a.params.validate();
  ReplayResult replay = read_log_file(a.log);
  for (const auto& w : replay.warnings) std::cerr << "warning: " << w << "\n";
  const LegitimacyReport report = legitimacy_report(replay.log, a.params);
  const std::string text = to_json(report).dump(2) + "\n";
  if (!a.report_path.empty()) {
    std::ofstream(a.report_path, std::ios::binary) << text;
  }
  if (a.quiet) {
    std::cout << to_string(report.overall) << "\n";
  } else {
    std::cout << text;
  }
  return exit_code(report.overall);
}

int cmd_classify(const std::string& path) {
  const std::vector<EssPoint> points = read_ess_file(path);
  const TertileMeans m = tertile_means(points);
  std::cout << "points " << points.size() << "\n";
  std::cout << "tertile_means " << fixed(m.m1) << " " << fixed(m.m2) << " " << fixed(m.m3) << "\n";
  std::cout << "tertile_sizes " << m.n1 << " " << m.n2 << " " << m.n3 << "\n";
  try {
    std::cout << "shape " << to_string(classify_ess_shape(points)) << "\n";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientData) throw;
    std::cout << "shape insufficient-data\n";
    std::cerr << e.what() << "\n";
    return exit_code(Verdict::kInsufficientData);
  }
  return 0;
}

struct ReplayArgs {
  std::string log;
  std::string scenario;
  std::optional<std::uint64_t> seed;
};

int cmd_replay(const ReplayArgs& a) {
  const std::string bytes = read_text(a.log);
  ReplaySummary summary = replay_log(bytes);
  nlohmann::json j = to_json(summary);
  int status = summary.round_trip ? 0 : kExitFailure;
  if (!a.scenario.empty()) {
    RunOptions options;
    options.seed = a.seed;
    const RunResult rerun = run_scenario(load_scenario(a.scenario), options);
    const bool same = serialize_log(rerun.log) == bytes;
    j["rerun_identical"] = same;
    if (!same) status = kExitFailure;
  }
  std::cout << j.dump(2) << "\n";
  return status;
}

struct ServeArgs {
  std::string config;
  std::string host = "127.0.0.1";
  std::uint16_t port = 7070;
  std::string log_dir = "logs";
  bool resume = false;
  std::optional<Tick> max_ticks;
};

int cmd_serve(ServeArgs a) {
  if (const char* env = std::getenv(kLogDirEnv); env && *env) a.log_dir = env;
  const ServiceConfig cfg = load_service_config(a.config);
  fs::create_directories(a.log_dir);
  const fs::path log_path = fs::path(a.log_dir) / (cfg.scenario.session + ".log");
  const bool resume = a.resume && fs::exists(log_path);
  SessionDriver driver(cfg, log_path, resume);
  if (const auto& recovered = driver.recovery()) {
    const RecoveryInfo& info = *recovered;
    for (const auto& w : info.warnings) std::cerr << "warning: " << w << "\n";
    std::cerr << "recovered " << info.records_kept << " records, dropped " << info.records_dropped
              << ", resuming at tick " << info.resumed_at << "\n";
  }

  install_signal_handlers();
  net::ServeOptions options;
  options.host = a.host;
  options.port = a.port;
  options.max_ticks = a.max_ticks;
  options.stop = &g_stop;
  options.on_listening = [&](std::uint16_t port) {
    std::cout << "listening " << a.host << ":" << port << " session " << cfg.scenario.session << " code "
              << driver.code().hex() << " log " << log_path.string() << std::endl;
  };
  const Tick ticks = net::serve(driver, options);
  std::cout << "stopped after " << ticks << " ticks at tick " << driver.tick() << std::endl;
  return 0;
}

struct GhostArgs {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7070;
  std::string code;
  std::string config;
  std::uint32_t count = 1;
  std::string policy = "random_painter";
  double quality = 0.5;
  std::string role = "ordinary";
  std::string prefix = "ghost";
  std::uint64_t seed = 0;
  std::optional<std::size_t> frames;
};

int cmd_ghost(const GhostArgs& a) {
  net::GhostOptions o;
  o.host = a.host;
  o.port = a.port;
  if (!a.code.empty()) {
    auto code = VanishingCode::from_hex(a.code);
    if (!code) throw Error(ErrorCode::kInvalidConfig, "--code must be 64 hex digits");
    o.code = *code;
  } else if (!a.config.empty()) {
    o.code = vanishing_code(load_service_config(a.config).scenario.genesis());
  } else {
    throw Error(ErrorCode::kInvalidConfig, "ghost needs --code or --config to know the session code");
  }
  o.count = a.count;
  o.policy = policy_from_string(a.policy);
  o.quality = a.quality;
  o.role = role_from_string(a.role);
  o.prefix = a.prefix;
  o.seed = a.seed;
  o.frames = a.frames;
  install_signal_handlers();
  o.stop = &g_stop;

  const net::GhostStats s = net::run_ghosts(o);
  nlohmann::json j;
  j["joined"] = s.joined;
  j["events_sent"] = s.events_sent;
  j["confirmed"] = s.confirmed;
  j["still_pending"] = s.still_pending;
  j["alienated"] = s.alienated;
  j["errors"] = s.errors;
  std::cout << j.dump() << std::endl;
  return s.errors.empty() ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective canvas sessions: simulate, audit, replay and serve."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "poietic 0.1.0");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write its log, metrics and report");
  run_cmd->add_option("scenario", run.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "Override the scenario seed");
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_flag("--resume", run.resume, "Continue an interrupted run from OUT/session.log");

  AuditArgs audit;
  auto* audit_cmd = app.add_subcommand(
      "audit", "Audit a session log (exit 0 legitimate, 2 illegitimate, 3 insufficient data)");
  audit_cmd->add_option("log", audit.log, "Session log")->required()->check(CLI::ExistingFile);
  audit_cmd->add_option("--window", audit.params.window, "Self-trace window W in ticks")
      ->capture_default_str();
  audit_cmd->add_option("--epsilon", audit.params.epsilon, "Fairness tolerance")->capture_default_str();
  audit_cmd->add_option("--theta", audit.params.theta, "Agreement threshold")->capture_default_str();
  audit_cmd->add_option("--admission-window", audit.params.admission_window, "Ticks allowed for admission")
      ->capture_default_str();
  audit_cmd->add_option("--report", audit.report_path, "Also write the report to this file");
  audit_cmd->add_flag("--quiet", audit.quiet, "Print only the verdict");

  std::string ess_path;
  auto* classify_cmd = app.add_subcommand("classify", "Classify the shape of an ESS point cloud");
  classify_cmd->add_option("points", ess_path, "CSV with header agent,q,y")
      ->required()
      ->check(CLI::ExistingFile);

  ReplayArgs replay;
  auto* replay_cmd = app.add_subcommand("replay", "Reconstruct a session from its log and summarize it");
  replay_cmd->add_option("log", replay.log, "Session log")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--scenario", replay.scenario, "Rerun this scenario and compare the bytes")
      ->check(CLI::ExistingFile);
  replay_cmd->add_option("--seed", replay.seed, "Seed for the rerun");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Host a live session");
  serve_cmd->add_option("--config", serve.config, "Service config file")
      ->required()
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--port", serve.port, "TCP port (0 picks a free one)")->capture_default_str();
  serve_cmd->add_option("--host", serve.host, "Listen address")->capture_default_str();
  serve_cmd->add_option("--log", serve.log_dir, std::string("Log directory (") + kLogDirEnv + " overrides)")
      ->capture_default_str();
  serve_cmd->add_flag("--resume", serve.resume, "Recover and continue an existing session log");
  serve_cmd->add_option("--max-ticks", serve.max_ticks, "Stop after this many ticks");

  GhostArgs ghost;
  auto* ghost_cmd = app.add_subcommand("ghost", "Attach scripted agents to a live session");
  ghost_cmd->add_option("--count", ghost.count, "Number of agents")->capture_default_str();
  ghost_cmd->add_option("--policy", ghost.policy, "random_painter[:p], mimic[:p] or signaler:<preset>")
      ->capture_default_str();
  ghost_cmd->add_option("--host", ghost.host)->capture_default_str();
  ghost_cmd->add_option("--port", ghost.port)->capture_default_str();
  ghost_cmd->add_option("--code", ghost.code, "Session code (hex)");
  ghost_cmd->add_option("--config", ghost.config, "Derive the session code from this service config")
      ->check(CLI::ExistingFile);
  ghost_cmd->add_option("--quality", ghost.quality)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  ghost_cmd->add_option("--role", ghost.role, "ordinary or operator")->capture_default_str();
  ghost_cmd->add_option("--prefix", ghost.prefix, "Agent ids are <prefix>-1, <prefix>-2, ...")
      ->capture_default_str();
  ghost_cmd->add_option("--seed", ghost.seed)->capture_default_str();
  ghost_cmd->add_option("--frames", ghost.frames, "Leave after this many frames");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run);
    if (audit_cmd->parsed()) return cmd_audit(audit);
    if (classify_cmd->parsed()) return cmd_classify(ess_path);
    if (replay_cmd->parsed()) return cmd_replay(replay);
    if (serve_cmd->parsed()) return cmd_serve(serve);
    if (ghost_cmd->parsed()) return cmd_ghost(ghost);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
