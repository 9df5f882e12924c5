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

#include "poietic/engine.hpp"

#include <algorithm>

namespace poietic {

namespace {

bool same_view(const Canvas& a, const Canvas& b) {
  return a.cells() == b.cells() && a.membership() == b.membership();
}

std::shared_ptr<const Frame> empty_frame(const CellGeometry& g) {
  auto f = std::make_shared<Frame>();
  f->geometry = g;
  return f;
}

template <class Key>
std::vector<Envelope> take_due(std::multimap<Key, Envelope>& queue, Tick now) {
  std::vector<Envelope> due;
  auto end = queue.upper_bound(now);
  for (auto it = queue.begin(); it != end; ++it) due.push_back(std::move(it->second));
  queue.erase(queue.begin(), end);
  return due;
}

// Centralized loop: agents upload events, the server merges them and
// broadcasts a frame that each client adopts as its view.
class TpEngine final : public Engine {
 public:
  TpEngine(EngineOptions options, RecordSink sink)
      : Engine(std::move(options), std::move(sink)),
        server_(server_node(), Canvas(options_.genesis.geometry), code_) {}

  std::vector<Observation> observe(Tick tick) override {
    std::set<AgentId> updated;
    for (Envelope& env : take_due(downlinks_, tick)) {
      auto client = clients_.find(env.to);
      if (client == clients_.end()) continue;  // recipient left meanwhile
      if (env.code != code_) {
        emit(rec::Rejected{tick, env.to, "code-mismatch", std::nullopt});
        continue;
      }
      emit(rec::Delivery{tick, env.id, env.from, env.to, env.sent_tick});
      if (!env.frame) continue;
      ClientView& view = client->second;
      view.canvas.adopt_membership(env.frame->membership, env.frame->dims);
      for (const auto& [pos, cell] : env.frame->cells) view.canvas.put_cell(pos, cell);
      view.frame_tick = std::max(view.frame_tick, env.frame->tick);
      updated.insert(env.to);
    }
    std::vector<Observation> out;
    for (const AgentId& agent : updated) {
      const ClientView& view = clients_.at(agent);
      auto frame = std::make_shared<const Frame>(render_frame(view.canvas, view.frame_tick));
      set_view(agent, frame);
      emit(rec::FrameObserved{tick, agent, frame});
      out.push_back(Observation{agent, std::move(frame)});
    }
    return out;
  }

  void submit(const Event& e, Tick tick) override {
    emit(rec::EventSent{tick, e});
    Envelope env;
    env.id = next_message_id();
    env.sent_tick = env.deliver_tick = tick;
    env.from = e.agent;
    env.to = server_node();
    env.channel = Channel::kUplink;
    env.code = code_;
    env.events.push_back(e);
    emit(rec::MessageSent{tick, env.id, env.from, env.to, env.channel});
    outbox_.push_back(std::move(env));
  }

  void end_tick(Tick tick) override {
    for (Envelope& env : route(tick, std::move(outbox_))) uplinks_.emplace(env.deliver_tick, std::move(env));
    outbox_.clear();

    std::vector<Event> inbound;
    for (Envelope& env : take_due(uplinks_, tick)) {
      if (env.code != code_) {
        emit(rec::Rejected{tick, server_node(), "code-mismatch", std::nullopt});
        continue;
      }
      emit(rec::Delivery{tick, env.id, env.from, server_node(), env.sent_tick});
      for (Event& e : env.events) inbound.push_back(std::move(e));
    }
    TpStepResult step = tp_step(server_, inbound, tick);
    for (const Rejection& r : step.rejected) emit(rec::Rejected{tick, r.node, r.reason, r.event});

    std::vector<Envelope> batch;
    for (const auto& [agent, pos] : members_) {
      const std::uint64_t id = next_message_id();
      emit(rec::MessageSent{tick, id, server_node(), agent, Channel::kDownlink});
      std::optional<Frame> shown = vp_.present(step.frame, agent, roles_.at(agent), tick, id);
      emit_truth(vp_.take_records());
      if (!shown) continue;
      Envelope env;
      env.id = id;
      env.sent_tick = tick;
      env.deliver_tick = tick + options_.downlink_latency;
      env.from = server_node();
      env.to = agent;
      env.channel = Channel::kDownlink;
      env.code = code_;
      env.frame = std::move(*shown);
      batch.push_back(std::move(env));
    }
    for (Envelope& env : route(tick, std::move(batch))) downlinks_.emplace(env.deliver_tick, std::move(env));
  }

  bool quiescent() const override {
    if (!outbox_.empty() || !uplinks_.empty() || !downlinks_.empty()) return false;
    return std::all_of(clients_.begin(), clients_.end(),
                       [&](const auto& kv) { return same_view(kv.second.canvas, server_.replica()); });
  }

  std::size_t distinct_views() const override {
    std::vector<const Canvas*> reps;
    for (const auto& [agent, view] : clients_) {
      if (std::none_of(reps.begin(), reps.end(),
                       [&](const Canvas* r) { return same_view(*r, view.canvas); })) {
        reps.push_back(&view.canvas);
      }
    }
    return reps.size();
  }

  Frame global_frame(Tick tick) const override { return render_frame(server_.replica(), tick); }

 protected:
  Position add_member(const AgentId& agent) override {
    const Position pos = server_.replica_mut().add_member(agent);
    clients_.insert_or_assign(agent, ClientView{Canvas(options_.genesis.geometry), 0});
    return pos;
  }

  void remove_member(const AgentId& agent, Tick tick) override {
    server_.replica_mut().remove_member(agent, tick);
    clients_.erase(agent);
  }

 private:
  struct ClientView {
    Canvas canvas;
    Tick frame_tick = 0;
  };

  NodeState server_;
  std::map<AgentId, ClientView> clients_;
  std::vector<Envelope> outbox_;
  std::multimap<Tick, Envelope> uplinks_;
  std::multimap<Tick, Envelope> downlinks_;
};

// Peer-to-peer loop: every member is a replica; events spread by push gossip.
class DpEngine final : public Engine {
 public:
  DpEngine(EngineOptions options, RecordSink sink)
      : Engine(std::move(options), std::move(sink)),
        template_(options_.genesis.geometry),
        rng_(derive_seed(options_.seed, "gossip")) {}

  std::vector<Observation> observe(Tick tick) override {
    std::vector<Observation> out;
    out.reserve(nodes_.size());
    for (const auto& [agent, node] : nodes_) {
      auto frame = std::make_shared<const Frame>(render_frame(node.replica(), tick));
      set_view(agent, frame);
      emit(rec::FrameObserved{tick, agent, frame});
      out.push_back(Observation{agent, std::move(frame)});
    }
    return out;
  }

  void submit(const Event& e, Tick tick) override {
    emit(rec::EventSent{tick, e});
    auto node = nodes_.find(e.agent);
    if (node == nodes_.end()) return;
    try {
      node->second.merge(e, e.agent);
    } catch (const Error& err) {
      emit(rec::Rejected{tick, e.agent, to_string(err.code()), e.key()});
    }
  }

  void end_tick(Tick tick) override {
    std::vector<NodeId> ids;
    ids.reserve(nodes_.size());
    for (const auto& [id, node] : nodes_) ids.push_back(id);

    std::vector<Envelope> batch;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      NodeState& node = nodes_.at(ids[i]);
      const std::vector<NodeId> peers = peers_of(ids, i);
      for (Outgoing& o : dp_gossip_round(node, peers, options_.genesis.topology.fanout, rng_)) {
        Envelope env;
        env.id = next_message_id();
        env.sent_tick = env.deliver_tick = tick;
        env.from = node.id();
        env.to = o.to;
        env.channel = Channel::kGossip;
        env.code = o.message.code;
        env.events = std::move(o.message.events);
        env.seen_count = o.message.seen_count;
        env.replica_digest = o.message.replica_digest;
        emit(rec::MessageSent{tick, env.id, env.from, env.to, env.channel});
        batch.push_back(std::move(env));
      }
    }
    for (Envelope& env : route(tick, std::move(batch))) in_flight_.emplace(env.deliver_tick, std::move(env));

    for (Envelope& env : take_due(in_flight_, tick)) {
      auto node = nodes_.find(env.to);
      if (node == nodes_.end()) continue;
      if (env.code != code_) {
        emit(rec::Rejected{tick, env.to, "code-mismatch", std::nullopt});
        continue;
      }
      emit(rec::Delivery{tick, env.id, env.from, env.to, env.sent_tick});
      GossipMessage msg{env.code, env.from, std::move(env.events), env.seen_count, env.replica_digest};
      ReceiveResult rr = dp_receive(node->second, msg);
      for (const Rejection& r : rr.rejected) emit(rec::Rejected{tick, r.node, r.reason, r.event});
    }
  }

  bool quiescent() const override { return in_flight_.empty() && distinct_views() <= 1; }

  std::size_t distinct_views() const override {
    std::vector<Digest> digests;
    digests.reserve(nodes_.size());
    for (const auto& [id, node] : nodes_) digests.push_back(node.digest());
    std::sort(digests.begin(), digests.end());
    return static_cast<std::size_t>(std::unique(digests.begin(), digests.end()) - digests.begin());
  }

  Frame global_frame(Tick tick) const override {
    if (nodes_.empty()) return render_frame(template_, tick);
    return render_frame(nodes_.begin()->second.replica(), tick);
  }

 protected:
  Position add_member(const AgentId& agent) override {
    const Position pos = template_.add_member(agent);
    for (auto& [id, node] : nodes_) {
      node.replica_mut().add_member(agent);
      node.forget_peer(agent);
    }
    nodes_.erase(agent);
    nodes_.emplace(agent, NodeState(agent, template_, code_));
    return pos;
  }

  void remove_member(const AgentId& agent, Tick tick) override {
    template_.remove_member(agent, tick);
    nodes_.erase(agent);
    for (auto& [id, node] : nodes_) {
      node.replica_mut().remove_member(agent, tick);
      node.forget_peer(agent);
    }
  }

 private:
  std::vector<NodeId> peers_of(const std::vector<NodeId>& ids, std::size_t i) const {
    std::vector<NodeId> peers;
    const std::size_t n = ids.size();
    if (n < 2) return peers;
    if (options_.peer_graph == PeerGraph::kRing) {
      peers.push_back(ids[(i + n - 1) % n]);
      if (n > 2) peers.push_back(ids[(i + 1) % n]);
      return peers;
    }
    peers.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) peers.push_back(ids[j]);
    }
    return peers;
  }

  Canvas template_;  // membership history shared by every replica, no cells
  std::map<AgentId, NodeState> nodes_;
  Rng rng_;
  std::multimap<Tick, Envelope> in_flight_;
};

}  // namespace

Engine::Engine(EngineOptions options, RecordSink sink)
    : options_(std::move(options)),
      code_(vanishing_code(options_.genesis)),
      vp_(options_.genesis.topology.kind),
      sink_(std::move(sink)) {
  for (const NoloopConfig& cfg : options_.noloops) {
    validate(cfg, options_.genesis.topology.kind);
    if (is_vanishing_point_kind(cfg.kind)) {
      vp_.corrupt(cfg);
    } else {
      interceptors_.emplace_back(cfg, options_.genesis.geometry);
    }
  }
}

std::unique_ptr<Engine> Engine::create(const EngineOptions& options, RecordSink sink) {
  if (options.genesis.topology.kind == TopologyKind::kDP) {
    return std::unique_ptr<Engine>(new DpEngine(options, std::move(sink)));
  }
  return std::unique_ptr<Engine>(new TpEngine(options, std::move(sink)));
}

rec::Genesis Engine::genesis_record() const {
  rec::Genesis g;
  g.session_id = options_.genesis.session_id;
  g.geometry = options_.genesis.geometry;
  g.topology = options_.genesis.topology;
  g.code = code_;
  return g;
}

JoinResult Engine::join(const AgentId& agent, Role role, Tick tick) {
  emit(rec::JoinRequest{tick, agent, role});
  JoinResult result;
  if (members_.contains(agent)) {
    result.reason = "duplicate-agent";
  } else {
    const AdmissionDecision d = vp_.admit(agent, tick);
    emit_truth(vp_.take_records());
    if (d.accepted) {
      result.accepted = true;
      result.position = add_member(agent);
      members_[agent] = *result.position;
      roles_[agent] = role;
      views_[agent] = empty_frame(options_.genesis.geometry);
    } else {
      result.reason = d.reason;
    }
  }
  emit(rec::JoinOutcome{tick, agent, result.accepted, result.position, result.reason});
  return result;
}

bool Engine::leave(const AgentId& agent, Tick tick) {
  if (!members_.contains(agent)) return false;
  emit(rec::LeaveRequest{tick, agent});
  remove_member(agent, tick);
  members_.erase(agent);
  views_.erase(agent);
  emit(rec::LeaveOutcome{tick, agent, true});
  return true;
}

bool Engine::is_member(const AgentId& agent) const { return members_.contains(agent); }

std::optional<Position> Engine::position_of(const AgentId& agent) const {
  auto it = members_.find(agent);
  if (it == members_.end()) return std::nullopt;
  return it->second;
}

std::vector<AgentId> Engine::members() const {
  std::vector<AgentId> out;
  out.reserve(members_.size());
  for (const auto& [a, p] : members_) out.push_back(a);
  return out;
}

std::optional<Role> Engine::role_of(const AgentId& agent) const {
  auto it = roles_.find(agent);
  if (it == roles_.end()) return std::nullopt;
  return it->second;
}

std::shared_ptr<const Frame> Engine::view(const AgentId& agent) const {
  auto it = views_.find(agent);
  if (it == views_.end()) return empty_frame(options_.genesis.geometry);
  return it->second;
}

void Engine::set_view(const AgentId& agent, std::shared_ptr<const Frame> frame) {
  views_[agent] = std::move(frame);
}

void Engine::emit_truth(std::vector<InterceptionRecord> records) {
  for (InterceptionRecord& r : records) emit(rec::GroundTruth{std::move(r)});
}

std::vector<Envelope> Engine::route(Tick now, std::vector<Envelope> batch) {
  for (Interceptor& icpt : interceptors_) {
    batch = icpt.process(now, std::move(batch));
    emit_truth(icpt.take_records());
  }
  return batch;
}

}  // namespace poietic
