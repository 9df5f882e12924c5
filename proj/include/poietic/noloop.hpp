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

// Feedback-loop manipulations ("noloops"). Edge kinds are stream transformers
// that sit between a sender and a receiver; server kinds corrupt what the
// vanishing point itself decides or broadcasts. Every alteration leaves an
// InterceptionRecord, which is simulation ground truth and never reaches the
// auditor.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "poietic/canvas.hpp"
#include "poietic/rng.hpp"
#include "poietic/topology.hpp"

namespace poietic {

enum class DropDirection { kToOthers, kToSelf };

// Level 1: peer.
struct OverSignal {
  AgentId target;
  std::uint32_t multiplier = 2;
};
struct IdentityForgery {
  AgentId victim;
};
struct NoiseInjection {
  double probability = 0.1;
};

// Level 2: network.
struct SelectiveDrop {
  AgentId target;
  DropDirection direction = DropDirection::kToOthers;
  double probability = 1.0;
};
struct Retain {
  AgentId target;
  Tick delay = 1;
};
struct MutatePayload {
  AgentId target;
  std::uint8_t mask = 0x5;
};
struct Partition {
  std::vector<std::vector<AgentId>> groups;
};
struct PassiveSpy {};

// Level 3: vanishing point.
struct LyingFrame {
  std::map<AgentId, CellPayload> overrides;  // whose cell -> what to show instead
  std::vector<AgentId> audience;             // empty: everyone
};
struct CounterManipulation {
  std::vector<AgentId> hidden;  // members left out of broadcast membership
  std::uint32_t phantoms = 0;   // fake members added to it
};
struct AdmissionMonopoly {
  std::optional<Tick> reject_after;  // refuse joins requested after this tick
  std::vector<AgentId> reject;       // refuse these agents outright
};
struct AsymmetricPipeline {
  Role privileged = Role::kOperator;
  double delivery_bias = 0.3;  // drop probability for everyone else
};

using NoloopKind =
    std::variant<OverSignal, IdentityForgery, NoiseInjection, SelectiveDrop, Retain, MutatePayload, Partition,
                 PassiveSpy, LyingFrame, CounterManipulation, AdmissionMonopoly, AsymmetricPipeline>;

/// Cheating level: 1 peer, 2 network, 3 vanishing point/code.
int classify_noloop(const NoloopKind& kind);
std::string kind_name(const NoloopKind& kind);
/// Server-side kinds are applied by VanishingPoint rather than an Interceptor.
bool is_vanishing_point_kind(const NoloopKind& kind);

struct ActiveWindow {
  Tick start = 0;
  Tick end = ~Tick{0};

  bool contains(Tick t) const { return t >= start && t <= end; }
};

struct NoloopConfig {
  NoloopKind kind;
  ActiveWindow window;
  std::uint64_t seed = 0;
};

/// Throws kInvalidConfig / kTopologyMismatch.
void validate(const NoloopConfig& cfg, TopologyKind topology);

enum class InterceptionAction { kDrop, kStrip, kDelay, kMutate, kInject, kOverride, kRefuse, kObserve };
const char* to_string(InterceptionAction a);
InterceptionAction action_from_string(const std::string& s);

struct InterceptionRecord {
  Tick tick = 0;
  std::string noloop;
  int level = 0;
  InterceptionAction action = InterceptionAction::kObserve;
  std::uint64_t message_id = 0;
  NodeId from;
  NodeId to;
  std::optional<AgentId> subject;  // whose content was affected
  std::string detail;

  /// Observation records document a copy, not a change.
  bool alters() const { return action != InterceptionAction::kObserve; }
  friend bool operator==(const InterceptionRecord&, const InterceptionRecord&) = default;
};

enum class Channel { kUplink, kDownlink, kGossip };
const char* to_string(Channel c);

/// A message in flight on one delivery edge.
struct Envelope {
  std::uint64_t id = 0;  // 0 for traffic nobody honestly sent
  Tick sent_tick = 0;
  Tick deliver_tick = 0;
  NodeId from;
  NodeId to;
  Channel channel = Channel::kUplink;
  VanishingCode code;
  std::vector<Event> events;     // uplink and gossip
  std::optional<Frame> frame;    // downlink
  std::uint64_t seen_count = 0;  // gossip summary
  Digest replica_digest{};

  bool carries(const AgentId& agent) const;
  friend bool operator==(const Envelope&, const Envelope&) = default;
};

/// Stateful interceptor for one NoloopConfig, fed batch by batch in tick
/// order. Outside the active window it is the identity.
class Interceptor {
 public:
  explicit Interceptor(NoloopConfig cfg, CellGeometry geometry = {});

  const NoloopConfig& config() const { return cfg_; }

  /// Transforms the messages sent at `now`. Delays show up as a later
  /// deliver_tick; the caller schedules delivery.
  std::vector<Envelope> process(Tick now, std::vector<Envelope> batch);

  const std::vector<InterceptionRecord>& records() const { return records_; }
  std::vector<InterceptionRecord> take_records();

 private:
  void record(const Envelope& env, InterceptionAction action, std::optional<AgentId> subject,
              std::string detail);
  NoloopConfig cfg_;
  CellGeometry geometry_;
  Rng rng_;
  std::vector<InterceptionRecord> records_;
  std::optional<Seq> victim_seq_;  // IdentityForgery bookkeeping
  Seq forged_ = 0;
};

struct InterceptionResult {
  std::vector<Envelope> messages;  // ordered by (deliver_tick, input order)
  std::vector<InterceptionRecord> records;
};

/// Pure stream form: same (cfg, stream) -> same output. `stream` must be
/// ordered by sent_tick.
InterceptionResult apply_interception(const NoloopConfig& cfg, std::vector<Envelope> stream,
                                      const CellGeometry& geometry = {});
/// Variant drawing the interceptor seed from a caller-owned generator.
InterceptionResult apply_interception(const NoloopConfig& cfg, std::vector<Envelope> stream, Rng& rng,
                                      const CellGeometry& geometry = {});

struct AdmissionDecision {
  bool accepted = true;
  std::string reason;
};

/// The TP server (or, in DP, the party handing out the vanishing code) with
/// any level-3 lies configured against it.
class VanishingPoint {
 public:
  explicit VanishingPoint(TopologyKind topology);

  TopologyKind topology() const { return topology_; }
  const std::vector<NoloopConfig>& lies() const { return lies_; }
  bool honest() const { return lies_.empty(); }

  /// Throws kTopologyMismatch when the lie cannot be expressed here.
  void corrupt(const NoloopConfig& lie);

  AdmissionDecision admit(const AgentId& agent, Tick tick);

  /// What `recipient` is actually sent instead of `honest`. nullopt: the
  /// delivery was suppressed.
  std::optional<Frame> present(const Frame& honest, const AgentId& recipient, Role role, Tick tick,
                               std::uint64_t message_id);

  const std::vector<InterceptionRecord>& records() const { return records_; }
  std::vector<InterceptionRecord> take_records();

 private:
  TopologyKind topology_;
  std::vector<NoloopConfig> lies_;
  std::vector<Rng> rngs_;
  std::vector<InterceptionRecord> records_;
};

/// Value form: returns `vp` with `lie` installed.
VanishingPoint corrupt_vanishing_point(VanishingPoint vp, const NoloopConfig& lie);

nlohmann::json encode_noloop(const NoloopConfig& cfg, const CellGeometry& g);
NoloopConfig decode_noloop(const nlohmann::json& j, const CellGeometry& g);
nlohmann::json encode_record(const InterceptionRecord& r);
InterceptionRecord decode_record(const nlohmann::json& j);

}  // namespace poietic
