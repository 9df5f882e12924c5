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

#include "poietic/session_service.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "poietic/codec.hpp"
#include "poietic/harness.hpp"

namespace poietic {

using nlohmann::json;

ServiceConfig parse_service_config(const json& j) {
  if (!j.is_object())
    throw Error(ErrorCode::kInvalidConfig, "invalid service config: top level must be an object");
  ServiceConfig cfg;
  json base = j;
  std::vector<std::string> problems;
  auto take_unsigned = [&](const char* key, auto& out) {
    if (!base.contains(key)) return;
    try {
      out = codec::unsigned_value<std::decay_t<decltype(out)>>(base.at(key));
      if (out == 0) problems.push_back(std::string(key) + ": must be positive");
    } catch (const Error& e) {
      problems.push_back(std::string(key) + ": " + e.what());
    }
    base.erase(key);
  };
  take_unsigned("tick_ms", cfg.tick_ms);
  take_unsigned("badge_every", cfg.badge_every);

  // Noloops are checked on their own: live agents are not known up front.
  json noloops = json::array();
  if (base.contains("noloops")) {
    noloops = base.at("noloops");
    base.erase("noloops");
  }
  if (!base.contains("agents")) base["agents"] = json::array({json{{"count", 1}}});
  try {
    cfg.scenario = parse_scenario(base);
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  TopologyKind topology = cfg.scenario.topology.kind;
  if (!problems.empty()) {
    try {
      topology = topology_from_string(base.at("topology").at("kind").get<std::string>());
    } catch (const std::exception&) {
    }
  }
  if (!noloops.is_array()) {
    problems.push_back("noloops: expected a list");
  } else {
    for (std::size_t i = 0; i < noloops.size(); ++i) {
      try {
        NoloopConfig n = decode_noloop(noloops[i], cfg.scenario.geometry);
        validate(n, topology);
        cfg.scenario.noloops.push_back(std::move(n));
      } catch (const Error& e) {
        problems.push_back("noloops[" + std::to_string(i) + "]: " + e.what());
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid service config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorCode::kInvalidConfig, msg);
  }
  return cfg;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read " + path.string());
  try {
    return parse_service_config(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
}

SessionDriver::SessionDriver(ServiceConfig config, std::filesystem::path log_path, bool resume)
    : config_(std::move(config)), log_path_(std::move(log_path)), tracker_(config_.scenario.audit.window) {
  engine_ = Engine::create(engine_options(config_.scenario, config_.scenario.seed),
                           [this](Record r) { record(std::move(r)); });
  std::error_code ec;
  const bool existing =
      std::filesystem::exists(log_path_, ec) && std::filesystem::file_size(log_path_, ec) > 0;
  if (resume && existing) {
    recover();
    return;
  }
  if (log_path_.has_parent_path()) std::filesystem::create_directories(log_path_.parent_path());
  writer_ = std::make_unique<LogWriter>(log_path_, true);
  record(engine_->genesis_record());
}

SessionDriver::~SessionDriver() = default;

void SessionDriver::record(Record r) {
  tracker_.observe(r);
  if (replay_sink_) {
    replay_sink_->push_back(std::move(r));
  } else {
    writer_->append(r);
  }
}

void SessionDriver::recover() {
  std::ifstream in(log_path_, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ReplayResult parsed = parse_log(bytes);
  std::vector<Record>& records = parsed.log.records;
  if (records.empty() || !std::holds_alternative<rec::Genesis>(records.front())) {
    throw Error(ErrorCode::kCorruptLog, log_path_.string() + ": no genesis record");
  }
  if (!(std::get<rec::Genesis>(records.front()) == engine_->genesis_record())) {
    throw Error(ErrorCode::kCorruptLog,
                log_path_.string() + ": written by a different session configuration");
  }
  std::size_t keep = 1;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (std::holds_alternative<rec::TickMark>(records[i])) keep = i + 1;
  }

  RecoveryInfo info;
  info.warnings = parsed.warnings;
  info.records_kept = keep;
  info.records_dropped = records.size() - keep;

  std::vector<Record> produced;
  replay_sink_ = &produced;
  tracker_.observe(records.front());
  std::size_t i = 1;
  while (i < keep) {
    std::size_t end = i;
    while (!std::holds_alternative<rec::TickMark>(records[end])) ++end;
    const Tick t = std::get<rec::TickMark>(records[end]).tick;
    if (t != tick_) {
      replay_sink_ = nullptr;
      throw Error(ErrorCode::kCorruptLog, "tick " + std::to_string(t) + " follows tick " +
                                              std::to_string(tick_) + " without the ticks in between");
    }
    for (std::size_t k = i; k < end; ++k) {
      if (const auto* j = std::get_if<rec::JoinRequest>(&records[k])) engine_->join(j->agent, j->role, t);
      if (const auto* l = std::get_if<rec::LeaveRequest>(&records[k])) engine_->leave(l->agent, t);
    }
    engine_->observe(t);
    for (std::size_t k = i; k < end; ++k) {
      if (const auto* e = std::get_if<rec::EventSent>(&records[k])) engine_->submit(e->event, t);
    }
    engine_->end_tick(t);
    const bool same =
        produced.size() == end - i && std::equal(produced.begin(), produced.end(), records.begin() + i);
    if (!same) {
      replay_sink_ = nullptr;
      throw Error(ErrorCode::kCorruptLog, "re-execution of tick " + std::to_string(t) +
                                              " disagrees with the log (record " + std::to_string(i) +
                                              " onwards)");
    }
    produced.clear();
    tracker_.observe(records[end]);
    tick_ = t + 1;
    i = end + 1;
  }
  replay_sink_ = nullptr;

  // Byte offset just past the last kept line.
  std::size_t offset = 0;
  for (std::size_t lines = 0; lines < keep; ++lines) offset = bytes.find('\n', offset) + 1;
  std::filesystem::resize_file(log_path_, offset);
  records.resize(keep);
  writer_ = std::make_unique<LogWriter>(log_path_, false);
  writer_->prime(parsed.log);
  info.resumed_at = tick_;
  recovery_ = std::move(info);
}

void SessionDriver::connect(ConnectionId c) { connections_.try_emplace(c); }

void SessionDriver::disconnect(ConnectionId c) { connections_.erase(c); }

std::optional<AgentId> SessionDriver::agent_of(ConnectionId c) const {
  auto it = connections_.find(c);
  if (it == connections_.end()) return std::nullopt;
  return it->second.agent;
}

void SessionDriver::send(ConnectionId c, wire::Body body, bool close_after) {
  if (!connections_.contains(c)) return;
  outbox_.push_back(
      Outbound{c, wire::encode(wire::Message{code(), std::move(body)}, geometry()), close_after});
}

void SessionDriver::error(ConnectionId c, const std::string& reason, const std::string& detail) {
  send(c, wire::ErrorMsg{reason, detail});
}

std::vector<Outbound> SessionDriver::take_outbound() { return std::exchange(outbox_, {}); }

void SessionDriver::receive(ConnectionId c, std::string_view line) {
  connect(c);
  wire::Message m;
  try {
    m = wire::decode(line, geometry());
  } catch (const wire::WireError& e) {
    ++refused_;
    error(c, e.reason(), e.what());
    return;
  }
  if (m.code != code()) {
    ++refused_;
    error(c, wire::reason::kCodeMismatch, "this session's code is " + code().hex());
    return;
  }
  if (!wire::client_kind(m.kind())) {
    ++refused_;
    error(c, wire::reason::kUnexpectedKind,
          std::string(wire::to_string(m.kind())) + " is sent by the service only");
    return;
  }
  if (const auto* j = std::get_if<wire::Join>(&m.body)) handle_join(c, *j);
  if (const auto* l = std::get_if<wire::Leave>(&m.body)) handle_leave(c, *l);
  if (const auto* e = std::get_if<wire::EventMsg>(&m.body)) handle_event(c, *e);
}

void SessionDriver::handle_join(ConnectionId c, const wire::Join& join) {
  Connection& conn = connections_.at(c);
  if (conn.agent || conn.spectator) {
    error(c, wire::reason::kDuplicateAgent,
          "connection already joined" +
              (conn.agent ? " as " + conn.agent->str() : std::string(" as a spectator")));
    return;
  }
  const GenesisConfig& g = engine_->genesis();
  wire::JoinAck ack{join.agent,   std::nullopt,    g.geometry, wire::palette_colors(g.geometry.palette),
                    g.session_id, g.topology.kind, tick_,      join.spectator};
  if (join.spectator) {
    conn.spectator = true;
    send(c, std::move(ack));
    return;
  }
  if (engine_->is_member(join.agent)) {
    for (const auto& [other, oc] : connections_) {
      if (oc.agent == join.agent) {
        error(c, wire::reason::kDuplicateAgent, join.agent.str() + " is connected elsewhere");
        return;
      }
    }
    // A member whose connection dropped takes its slot back.
    conn.agent = join.agent;
    ack.position = engine_->position_of(join.agent);
    send(c, std::move(ack));
    return;
  }
  const JoinResult result = engine_->join(join.agent, join.role, tick_);
  if (!result.accepted) {
    error(c, wire::reason::kAdmissionRefused, result.reason);
    return;
  }
  conn.agent = join.agent;
  ack.position = result.position;
  send(c, std::move(ack));
}

void SessionDriver::handle_leave(ConnectionId c, const wire::Leave& leave) {
  Connection& conn = connections_.at(c);
  if (conn.agent != leave.agent || !engine_->is_member(leave.agent)) {
    error(c, wire::reason::kUnknownAgent, leave.agent.str() + " is not a member joined on this connection");
    return;
  }
  engine_->leave(leave.agent, tick_);
  conn.agent.reset();
  conn.last_sent.reset();
  send(c, wire::LeaveAck{leave.agent, tick_});
}

void SessionDriver::handle_event(ConnectionId c, const wire::EventMsg& event) {
  const Connection& conn = connections_.at(c);
  if (!conn.agent) {
    error(c, wire::reason::kNonMember, "join before sending events");
    return;
  }
  if (*conn.agent != event.agent) {
    error(c, wire::reason::kNonMember, "this connection is joined as " + conn.agent->str());
    return;
  }
  if (!event.payload.valid_for(geometry())) {
    error(c, wire::reason::kMalformed, "payload does not fit the session geometry");
    return;
  }
  inbox_.push_back(Queued{c, Event{event.agent, tick_, event.seq, event.payload}});
}

void SessionDriver::pump_tick(std::int64_t wall_ms) {
  const Tick t = tick_;
  engine_->observe(t);
  for (Queued& q : inbox_) {
    if (!engine_->is_member(q.event.agent)) {
      error(q.from, wire::reason::kNonMember, q.event.agent.str() + " left before the event was submitted");
      continue;
    }
    q.event.tick = t;
    engine_->submit(q.event, t);
  }
  inbox_.clear();
  engine_->end_tick(t);
  record(rec::TickMark{t, wall_ms});

  std::shared_ptr<const Frame> global;
  for (auto& [c, conn] : connections_) {
    std::shared_ptr<const Frame> frame;
    if (conn.spectator) {
      if (!global) global = std::make_shared<const Frame>(engine_->global_frame(t));
      frame = global;
    } else if (conn.agent) {
      frame = engine_->view(*conn.agent);
    } else {
      continue;
    }
    if (!conn.last_sent || conn.last_sent->membership != frame->membership ||
        conn.last_sent->dims != frame->dims) {
      send(c, wire::FrameMsg{t, *frame});
    } else {
      send(c, wire::DeltaMsg{t, frame->tick, frame->dims, diff_frames(*conn.last_sent, *frame)});
    }
    conn.last_sent = std::move(frame);
  }
  tick_ = t + 1;
  if (tick_ % config_.badge_every == 0) push_badges();
}

void SessionDriver::push_badges() {
  tracker_.advance(tick_);
  for (const auto& [c, conn] : connections_) {
    if (!conn.agent) continue;
    TraceReport report{*conn.agent, true, {}};
    if (tracker_.knows(*conn.agent)) report = tracker_.report(*conn.agent);
    send(c, wire::make_badge(report, tick_ - 1));
  }
}

}  // namespace poietic
