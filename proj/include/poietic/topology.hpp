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

// The two network engines: a centralized server loop (TP) and push-based
// epidemic gossip between peers (DP). Both are single-driver state machines;
// nothing here touches sockets.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "poietic/canvas.hpp"
#include "poietic/digest.hpp"
#include "poietic/rng.hpp"

namespace poietic {

enum class TopologyKind { kTP, kDP };

const char* to_string(TopologyKind kind);
TopologyKind topology_from_string(const std::string& s);

struct Topology {
  TopologyKind kind = TopologyKind::kTP;
  std::uint32_t fanout = 3;  // DP only

  friend bool operator==(const Topology&, const Topology&) = default;
};

struct GenesisConfig {
  std::string session_id;
  CellGeometry geometry;
  Topology topology;
};

/// Digest of the genesis configuration. Every node drops traffic that does
/// not carry it.
struct VanishingCode {
  Digest bytes{};

  std::string hex() const { return to_hex(bytes); }
  static std::optional<VanishingCode> from_hex(std::string_view hex);
  friend bool operator==(const VanishingCode&, const VanishingCode&) = default;
};

VanishingCode vanishing_code(const GenesisConfig& genesis);

struct Rejection {
  NodeId node;
  std::string reason;  // "code-mismatch" | "non-member" | "invalid-payload"
  std::optional<EventKey> event;
};

/// An event a node has merged and the node it learned it from.
struct KnownEvent {
  Event event;
  NodeId origin;
};

/// Replica state of one node. `seen` only grows and the replica is exactly
/// the fold of the events in `seen`.
class NodeState {
 public:
  NodeState(NodeId id, Canvas replica, VanishingCode code);

  const NodeId& id() const { return id_; }
  const VanishingCode& code() const { return code_; }
  const Canvas& replica() const { return replica_; }
  Canvas& replica_mut();
  const std::unordered_set<EventKey, EventKeyHash>& seen() const { return seen_; }
  const std::vector<KnownEvent>& known() const { return known_; }

  /// Merges an event learned from `from`. Returns false for duplicates;
  /// throws like Canvas::apply for non-members.
  bool merge(const Event& e, const NodeId& from);

  /// Events not yet pushed to `peer` (optimistic: pushing counts as delivered).
  std::vector<Event> pending_for(const NodeId& peer) const;
  void mark_pushed(const NodeId& peer);
  /// Drops per-peer tracking, used when a peer leaves or rejoins.
  void forget_peer(const NodeId& peer);

  const Digest& digest() const;

 private:
  NodeId id_;
  Canvas replica_;
  VanishingCode code_;
  std::unordered_set<EventKey, EventKeyHash> seen_;
  std::vector<KnownEvent> known_;
  std::map<NodeId, std::size_t> cursors_;
  mutable std::optional<Digest> digest_;
};

struct TpStepResult {
  Frame frame;
  std::size_t merged = 0;
  std::size_t duplicates = 0;
  std::vector<Rejection> rejected;
};

/// Merges every admissible inbound event and renders the tick's broadcast.
TpStepResult tp_step(NodeState& server, std::span<const Event> inbound, Tick tick);

struct GossipMessage {
  VanishingCode code;
  NodeId from;
  std::vector<Event> events;
  // Summary of the sender's state, filled only when nothing is pending.
  std::uint64_t seen_count = 0;
  Digest replica_digest{};
};

struct Outgoing {
  NodeId to;
  GossipMessage message;
};

/// Picks `fanout` distinct peers uniformly and pushes each its pending events.
std::vector<Outgoing> dp_gossip_round(NodeState& node, std::span<const NodeId> peers, std::uint32_t fanout,
                                      Rng& rng);

struct ReceiveResult {
  std::size_t merged = 0;
  std::vector<Rejection> rejected;
};

/// Code gate, then merges unseen events. Redelivery is a no-op.
ReceiveResult dp_receive(NodeState& node, const GossipMessage& msg);

struct ConvergenceStatus {
  bool converged = false;
  std::uint64_t rounds_elapsed = 0;
};

/// Converged iff every replica serializes to the same bytes.
ConvergenceStatus detect_convergence(std::span<const NodeState> nodes, std::uint64_t rounds_elapsed);
bool replicas_identical(std::span<const NodeState* const> nodes);

}  // namespace poietic
