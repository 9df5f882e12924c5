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

// Tick-driven session engines shared by the simulator and the live service.
// Every fact is reported to a RecordSink as it happens, in a fixed order, so
// the same inputs always yield the same record stream.
//
// Per tick the driver calls, in order: join()/leave(), observe(), submit()
// for each new event, end_tick().

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "poietic/noloop.hpp"
#include "poietic/scenario.hpp"
#include "poietic/session_log.hpp"
#include "poietic/topology.hpp"

namespace poietic {

using RecordSink = std::function<void(Record)>;

struct EngineOptions {
  GenesisConfig genesis;
  std::vector<NoloopConfig> noloops;  // used with their seeds as given
  PeerGraph peer_graph = PeerGraph::kComplete;
  std::uint64_t seed = 0;     // gossip peer selection
  Tick downlink_latency = 1;  // TP: server frame of tick t arrives at t + latency
};

struct JoinResult {
  bool accepted = false;
  std::optional<Position> position;
  std::string reason;
};

struct Observation {
  AgentId agent;
  std::shared_ptr<const Frame> frame;
};

class Engine {
 public:
  /// Throws kInvalidConfig / kTopologyMismatch for unusable noloops.
  static std::unique_ptr<Engine> create(const EngineOptions& options, RecordSink sink);
  virtual ~Engine() = default;

  const GenesisConfig& genesis() const { return options_.genesis; }
  const VanishingCode& code() const { return code_; }
  rec::Genesis genesis_record() const;

  /// Logs JoinRequest and JoinOutcome. Refusals come only from admission lies.
  JoinResult join(const AgentId& agent, Role role, Tick tick);
  /// Logs LeaveRequest and LeaveOutcome. Returns false, logging nothing,
  /// when `agent` is not a member.
  bool leave(const AgentId& agent, Tick tick);
  bool is_member(const AgentId& agent) const;
  std::optional<Position> position_of(const AgentId& agent) const;
  std::vector<AgentId> members() const;
  std::optional<Role> role_of(const AgentId& agent) const;

  /// Delivers what is due at `tick` and logs each agent's FrameObserved.
  virtual std::vector<Observation> observe(Tick tick) = 0;
  /// Logs EventSent and hands the event to the network.
  virtual void submit(const Event& e, Tick tick) = 0;
  /// Advances the network: server step (TP) or one gossip round (DP).
  virtual void end_tick(Tick tick) = 0;

  /// Nothing in flight and every member's view equals the shared state.
  virtual bool quiescent() const = 0;
  /// Number of distinct member views (1 when converged).
  virtual std::size_t distinct_views() const = 0;
  /// The agent's latest observation; an empty frame before the first.
  std::shared_ptr<const Frame> view(const AgentId& agent) const;
  /// TP: the server's state. DP: the lowest-id member's replica.
  virtual Frame global_frame(Tick tick) const = 0;

 protected:
  Engine(EngineOptions options, RecordSink sink);

  virtual Position add_member(const AgentId& agent) = 0;
  virtual void remove_member(const AgentId& agent, Tick tick) = 0;

  void emit(Record r) { sink_(std::move(r)); }
  void emit_truth(std::vector<InterceptionRecord> records);
  std::uint64_t next_message_id() { return ++last_message_id_; }
  /// Runs `batch` through every edge interceptor in configuration order.
  std::vector<Envelope> route(Tick now, std::vector<Envelope> batch);
  void set_view(const AgentId& agent, std::shared_ptr<const Frame> frame);

  EngineOptions options_;
  VanishingCode code_;
  VanishingPoint vp_;
  std::vector<Interceptor> interceptors_;
  std::map<AgentId, Role> roles_;
  std::map<AgentId, Position> members_;
  std::map<AgentId, std::shared_ptr<const Frame>> views_;

 private:
  RecordSink sink_;
  std::uint64_t last_message_id_ = 0;
};

}  // namespace poietic
