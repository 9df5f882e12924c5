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

#include "poietic/topology.hpp"

#include <algorithm>

namespace poietic {

const char* to_string(TopologyKind kind) { return kind == TopologyKind::kDP ? "DP" : "TP"; }

TopologyKind topology_from_string(const std::string& s) {
  if (s == "TP") return TopologyKind::kTP;
  if (s == "DP") return TopologyKind::kDP;
  throw Error(ErrorCode::kInvalidConfig, "topology must be TP or DP, got '" + s + "'");
}

std::optional<VanishingCode> VanishingCode::from_hex(std::string_view hex) {
  auto bytes = poietic::from_hex(hex);
  if (!bytes || bytes->size() != 32) return std::nullopt;
  VanishingCode code;
  std::copy(bytes->begin(), bytes->end(), code.bytes.begin());
  return code;
}

VanishingCode vanishing_code(const GenesisConfig& genesis) {
  ByteWriter w;
  w.str("poietic-genesis-v1");
  w.str(genesis.session_id);
  w.u32(genesis.geometry.side);
  w.u32(genesis.geometry.palette);
  w.str(to_string(genesis.topology.kind));
  w.u32(genesis.topology.kind == TopologyKind::kDP ? genesis.topology.fanout : 0);
  return VanishingCode{sha256(w.data())};
}

NodeState::NodeState(NodeId id, Canvas replica, VanishingCode code)
    : id_(std::move(id)), replica_(std::move(replica)), code_(code) {}

Canvas& NodeState::replica_mut() {
  digest_.reset();
  return replica_;
}

bool NodeState::merge(const Event& e, const NodeId& from) {
  if (seen_.contains(e.key())) return false;
  replica_.apply(e);
  digest_.reset();
  seen_.insert(e.key());
  known_.push_back(KnownEvent{e, from});
  return true;
}

std::vector<Event> NodeState::pending_for(const NodeId& peer) const {
  std::size_t start = 0;
  if (auto it = cursors_.find(peer); it != cursors_.end()) start = it->second;
  std::vector<Event> out;
  out.reserve(known_.size() - std::min(start, known_.size()));
  for (std::size_t i = start; i < known_.size(); ++i) {
    if (known_[i].origin == peer) continue;
    out.push_back(known_[i].event);
  }
  return out;
}

void NodeState::mark_pushed(const NodeId& peer) { cursors_[peer] = known_.size(); }

void NodeState::forget_peer(const NodeId& peer) { cursors_.erase(peer); }

const Digest& NodeState::digest() const {
  if (!digest_) digest_ = canvas_digest(replica_);
  return *digest_;
}

TpStepResult tp_step(NodeState& server, std::span<const Event> inbound, Tick tick) {
  TpStepResult out;
  for (const Event& e : inbound) {
    if (server.seen().contains(e.key())) {
      ++out.duplicates;
      continue;
    }
    if (!server.replica().admits(e)) {
      out.rejected.push_back(Rejection{server.id(), "non-member", e.key()});
      continue;
    }
    if (!e.payload.valid_for(server.replica().geometry())) {
      out.rejected.push_back(Rejection{server.id(), "invalid-payload", e.key()});
      continue;
    }
    server.merge(e, e.agent);
    ++out.merged;
  }
  out.frame = render_frame(server.replica(), tick);
  return out;
}

std::vector<Outgoing> dp_gossip_round(NodeState& node, std::span<const NodeId> peers, std::uint32_t fanout,
                                      Rng& rng) {
  std::vector<Outgoing> out;
  if (peers.empty() || fanout == 0) return out;
  for (std::size_t idx : rng.sample_distinct(peers.size(), fanout)) {
    const NodeId& peer = peers[idx];
    GossipMessage msg{node.code(), node.id(), node.pending_for(peer), node.seen().size(), Digest{}};
    if (msg.events.empty()) msg.replica_digest = node.digest();
    node.mark_pushed(peer);
    out.push_back(Outgoing{peer, std::move(msg)});
  }
  return out;
}

ReceiveResult dp_receive(NodeState& node, const GossipMessage& msg) {
  ReceiveResult out;
  if (msg.code != node.code()) {
    out.rejected.push_back(Rejection{node.id(), "code-mismatch", std::nullopt});
    return out;
  }
  for (const Event& e : msg.events) {
    if (node.seen().contains(e.key())) continue;
    if (!node.replica().admits(e)) {
      out.rejected.push_back(Rejection{node.id(), "non-member", e.key()});
      continue;
    }
    if (!e.payload.valid_for(node.replica().geometry())) {
      out.rejected.push_back(Rejection{node.id(), "invalid-payload", e.key()});
      continue;
    }
    node.merge(e, msg.from);
    ++out.merged;
  }
  return out;
}

bool replicas_identical(std::span<const NodeState* const> nodes) {
  if (nodes.size() <= 1) return true;
  const auto reference = serialize(nodes.front()->replica());
  return std::all_of(nodes.begin() + 1, nodes.end(),
                     [&](const NodeState* n) { return serialize(n->replica()) == reference; });
}

ConvergenceStatus detect_convergence(std::span<const NodeState> nodes, std::uint64_t rounds_elapsed) {
  std::vector<const NodeState*> ptrs;
  ptrs.reserve(nodes.size());
  for (const auto& n : nodes) ptrs.push_back(&n);
  return ConvergenceStatus{replicas_identical(ptrs), rounds_elapsed};
}

}  // namespace poietic
