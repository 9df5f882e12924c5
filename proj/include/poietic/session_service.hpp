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

// Live session driver. It owns the engine, the log writer and the badge
// tracker; transports hand it decoded lines and collect what it queues.
// Nothing here touches sockets or clocks, so tests drive it directly.
//
// Tick discipline: JOIN and LEAVE take effect immediately at the current
// (not yet pumped) tick; EVENTs are queued and submitted by the next
// pump_tick(), which then advances the engine, fans frames out and closes
// the tick with a TickMark.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "poietic/engine.hpp"
#include "poietic/scenario.hpp"
#include "poietic/wire.hpp"

namespace poietic {

struct ServiceConfig {
  /// Session, geometry, topology, seed, noloops and audit parameters. Any
  /// roster, duration or drain in the file is ignored.
  ScenarioConfig scenario;
  Tick badge_every = 10;
  std::uint32_t tick_ms = 100;
};

/// Accepts a scenario document plus optional "tick_ms" and "badge_every".
/// Noloops may name agents that are not in the roster. Throws kInvalidConfig.
ServiceConfig parse_service_config(const nlohmann::json& j);
ServiceConfig load_service_config(const std::filesystem::path& path);

using ConnectionId = std::uint64_t;

struct Outbound {
  ConnectionId to = 0;
  std::string line;  // newline-terminated
  /// Close the connection once this line has been written.
  bool close_after = false;
};

struct RecoveryInfo {
  std::size_t records_kept = 0;
  std::size_t records_dropped = 0;  // the unfinished tick
  Tick resumed_at = 0;
  std::vector<std::string> warnings;
};

class SessionDriver {
 public:
  /// Starts a fresh log at `log_path`, or with `resume` re-executes an
  /// existing one up to its last completed tick and appends from there.
  /// Throws Error(kCorruptLog) when the surviving log disagrees with the
  /// re-execution or belongs to another configuration.
  SessionDriver(ServiceConfig config, std::filesystem::path log_path, bool resume = false);
  ~SessionDriver();

  void connect(ConnectionId c);
  /// Drops the connection. A member keeps its slot and may JOIN again.
  void disconnect(ConnectionId c);
  /// Handles one inbound line. Replies and errors are queued.
  void receive(ConnectionId c, std::string_view line);
  /// Completes the current tick, annotated with `wall_ms`.
  void pump_tick(std::int64_t wall_ms = 0);
  std::vector<Outbound> take_outbound();

  Tick tick() const { return tick_; }
  const VanishingCode& code() const { return engine_->code(); }
  const CellGeometry& geometry() const { return config_.scenario.geometry; }
  const ServiceConfig& config() const { return config_; }
  const Engine& engine() const { return *engine_; }
  const std::optional<RecoveryInfo>& recovery() const { return recovery_; }
  std::optional<AgentId> agent_of(ConnectionId c) const;
  std::size_t connections() const { return connections_.size(); }
  /// Inbound messages refused before touching session state.
  std::size_t refused() const { return refused_; }
  TraceReport trace(const AgentId& agent) const { return tracker_.report(agent); }

 private:
  struct Connection {
    std::optional<AgentId> agent;
    bool spectator = false;
    std::shared_ptr<const Frame> last_sent;
    std::optional<Membership> last_membership;
  };
  struct Queued {
    ConnectionId from;
    Event event;
  };

  void record(Record r);
  void send(ConnectionId c, wire::Body body, bool close_after = false);
  void error(ConnectionId c, const std::string& reason, const std::string& detail);
  void handle_join(ConnectionId c, const wire::Join& join);
  void handle_leave(ConnectionId c, const wire::Leave& leave);
  void handle_event(ConnectionId c, const wire::EventMsg& event);
  void fan_out(ConnectionId c, Connection& conn);
  void push_badges();
  void recover();

  ServiceConfig config_;
  std::filesystem::path log_path_;
  std::unique_ptr<LogWriter> writer_;
  std::vector<Record>* replay_sink_ = nullptr;
  std::unique_ptr<Engine> engine_;
  SelfTraceTracker tracker_;
  Tick tick_ = 0;
  std::map<ConnectionId, Connection> connections_;
  std::vector<Queued> inbox_;
  std::vector<Outbound> outbox_;
  std::optional<RecoveryInfo> recovery_;
  std::size_t refused_ = 0;
};

}  // namespace poietic
