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

#include "poietic/wire.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "poietic/codec.hpp"

namespace poietic::wire {

using codec::field;
using codec::json;

namespace {

constexpr std::array<const char*, 9> kKindNames{"JOIN",  "JOIN_ACK",  "EVENT",       "FRAME", "DELTA",
                                                "LEAVE", "LEAVE_ACK", "AUDIT_BADGE", "ERROR"};

constexpr std::array<const char*, 16> kSwatches{
    "#000000", "#1d2b53", "#7e2553", "#008751", "#ab5236", "#5f574f", "#c2c3c7", "#fff1e8",
    "#ff004d", "#ffa300", "#ffec27", "#00e436", "#29adff", "#83769c", "#ff77a8", "#ffccaa"};

AgentId agent_field(const json& j, const char* key) {
  const auto id = field<std::string>(j, key);
  if (!valid_agent_id(id)) throw Error(ErrorCode::kMalformed, "invalid agent id '" + id + "'");
  return AgentId(id);
}

json encode_body(const Body& body, const CellGeometry& g) {
  return std::visit(
      [&](const auto& b) -> json {
        using T = std::decay_t<decltype(b)>;
        json j = json::object();
        if constexpr (std::is_same_v<T, Join>) {
          if (b.spectator) {
            j["spectator"] = true;
          } else {
            j["agent"] = b.agent.str();
            j["role"] = to_string(b.role);
          }
        } else if constexpr (std::is_same_v<T, JoinAck>) {
          j["agent"] = b.agent.str();
          j["position"] = b.position ? codec::encode_position(*b.position) : json(nullptr);
          j["geometry"] = codec::encode_geometry(b.geometry);
          j["palette"] = b.palette;
          j["session"] = b.session;
          j["topology"] = to_string(b.topology);
          j["tick"] = b.tick;
          j["spectator"] = b.spectator;
        } else if constexpr (std::is_same_v<T, EventMsg>) {
          j["agent"] = b.agent.str();
          j["seq"] = b.seq;
          j["pixels"] = codec::encode_pixels(b.payload, g);
        } else if constexpr (std::is_same_v<T, FrameMsg>) {
          j["tick"] = b.tick;
          j["frame"] = codec::encode_frame(b.frame);
        } else if constexpr (std::is_same_v<T, DeltaMsg>) {
          j["tick"] = b.tick;
          j["frame_tick"] = b.frame_tick;
          j["dims"] = b.dims;
          j["cells"] = codec::encode_diff(b.cells, g);
        } else if constexpr (std::is_same_v<T, Leave>) {
          j["agent"] = b.agent.str();
        } else if constexpr (std::is_same_v<T, LeaveAck>) {
          j["agent"] = b.agent.str();
          j["tick"] = b.tick;
        } else if constexpr (std::is_same_v<T, AuditBadge>) {
          j["agent"] = b.agent.str();
          j["tick"] = b.tick;
          j["verdict"] = b.intact ? "intact" : "alienated";
          j["events"] = b.events;
          j["satisfied"] = b.satisfied;
          j["superseded"] = b.superseded;
          j["pending"] = b.pending;
          json failed = json::array();
          for (const TraceEvidence& e : b.failed) failed.push_back({{"seq", e.event.seq}, {"tick", e.tick}});
          j["failed"] = std::move(failed);
        } else if constexpr (std::is_same_v<T, ErrorMsg>) {
          j["reason"] = b.reason;
          j["detail"] = b.detail;
        }
        return j;
      },
      body);
}

Body decode_body(Kind kind, const json& j, const CellGeometry& g) {
  switch (kind) {
    case Kind::kJoin: {
      Join b;
      b.spectator = j.contains("spectator") && field<bool>(j, "spectator");
      if (!b.spectator) {
        b.agent = agent_field(j, "agent");
        if (j.contains("role")) b.role = role_from_string(field<std::string>(j, "role"));
      }
      return b;
    }
    case Kind::kJoinAck: {
      JoinAck b;
      b.agent = AgentId(field<std::string>(j, "agent"));
      if (!j.at("position").is_null()) b.position = codec::decode_position(j.at("position"));
      b.geometry = codec::decode_geometry(j.at("geometry"));
      b.palette = field<std::vector<std::string>>(j, "palette");
      b.session = field<std::string>(j, "session");
      b.topology = topology_from_string(field<std::string>(j, "topology"));
      b.tick = field<Tick>(j, "tick");
      b.spectator = field<bool>(j, "spectator");
      return b;
    }
    case Kind::kEvent: {
      EventMsg b;
      b.agent = agent_field(j, "agent");
      b.seq = field<Seq>(j, "seq");
      b.payload = codec::decode_pixels(field<std::string>(j, "pixels"), g);
      return b;
    }
    case Kind::kFrame:
      return FrameMsg{field<Tick>(j, "tick"), codec::decode_frame(j.at("frame"), g)};
    case Kind::kDelta: {
      DeltaMsg b;
      b.tick = field<Tick>(j, "tick");
      b.frame_tick = field<Tick>(j, "frame_tick");
      b.dims = field<std::uint32_t>(j, "dims");
      b.cells = codec::decode_diff(j.at("cells"), g);
      return b;
    }
    case Kind::kLeave:
      return Leave{agent_field(j, "agent")};
    case Kind::kLeaveAck:
      return LeaveAck{AgentId(field<std::string>(j, "agent")), field<Tick>(j, "tick")};
    case Kind::kAuditBadge: {
      AuditBadge b;
      b.agent = AgentId(field<std::string>(j, "agent"));
      b.tick = field<Tick>(j, "tick");
      const auto verdict = field<std::string>(j, "verdict");
      if (verdict != "intact" && verdict != "alienated") {
        throw Error(ErrorCode::kMalformed, "unknown verdict '" + verdict + "'");
      }
      b.intact = verdict == "intact";
      b.events = field<std::size_t>(j, "events");
      b.satisfied = field<std::size_t>(j, "satisfied");
      b.superseded = field<std::size_t>(j, "superseded");
      b.pending = field<std::size_t>(j, "pending");
      for (const json& e : j.at("failed")) {
        TraceEvidence ev;
        ev.event = EventKey{b.agent, field<Seq>(e, "seq")};
        ev.tick = field<Tick>(e, "tick");
        ev.status = TraceStatus::kFailed;
        b.failed.push_back(ev);
      }
      return b;
    }
    case Kind::kError:
      return ErrorMsg{field<std::string>(j, "reason"), field<std::string>(j, "detail")};
  }
  throw Error(ErrorCode::kMalformed, "unreachable kind");
}

}  // namespace

const char* to_string(Kind k) { return kKindNames.at(static_cast<std::size_t>(k)); }

std::optional<Kind> kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (s == kKindNames[i]) return static_cast<Kind>(i);
  }
  return std::nullopt;
}

bool client_kind(Kind k) { return k == Kind::kJoin || k == Kind::kEvent || k == Kind::kLeave; }

std::string encode(const Message& m, const CellGeometry& g) {
  json j = encode_body(m.body, g);
  j["v"] = kProtocolVersion;
  j["kind"] = to_string(m.kind());
  j["code"] = m.code.hex();
  std::string line = j.dump();
  line.push_back('\n');
  return line;
}

Message decode(std::string_view line, const CellGeometry& g) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.size() > kMaxLineBytes) throw WireError(reason::kMalformed, "line exceeds the size limit");
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw WireError(reason::kMalformed, std::string("not JSON: ") + e.what());
  }
  if (!j.is_object()) throw WireError(reason::kMalformed, "expected a JSON object");
  try {
    const int version = field<int>(j, "v");
    if (version != kProtocolVersion) {
      throw WireError(reason::kMalformed, "unsupported protocol version " + std::to_string(version));
    }
    const auto name = field<std::string>(j, "kind");
    const auto kind = kind_from_string(name);
    if (!kind) throw WireError(reason::kUnknownKind, "unknown kind '" + name + "'");
    const auto code = VanishingCode::from_hex(field<std::string>(j, "code"));
    if (!code) throw WireError(reason::kMalformed, "session code is not 64 hex digits");
    return Message{*code, decode_body(*kind, j, g)};
  } catch (const Error& e) {
    throw WireError(reason::kMalformed, e.what());
  } catch (const json::exception& e) {
    throw WireError(reason::kMalformed, e.what());
  }
}

AuditBadge make_badge(const TraceReport& report, Tick tick) {
  AuditBadge b;
  b.agent = report.agent;
  b.tick = tick;
  b.intact = report.intact;
  b.events = report.evidence.size();
  b.satisfied = report.count(TraceStatus::kSatisfied);
  b.superseded = report.count(TraceStatus::kSuperseded);
  b.pending = report.count(TraceStatus::kPending);
  for (const TraceEvidence& e : report.evidence) {
    if (e.status == TraceStatus::kFailed) b.failed.push_back(e);
  }
  return b;
}

std::vector<std::string> palette_colors(std::uint32_t count) {
  std::vector<std::string> out;
  out.reserve(count);
  const std::uint32_t extra =
      count > kSwatches.size() ? count - static_cast<std::uint32_t>(kSwatches.size()) : 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (i < kSwatches.size()) {
      out.emplace_back(kSwatches[i]);
      continue;
    }
    // HSV with full saturation and value around the wheel.
    const double h = 6.0 * (i - kSwatches.size()) / extra;
    const double x = 1.0 - std::fabs(std::fmod(h, 2.0) - 1.0);
    double r = 0, gr = 0, b = 0;
    switch (static_cast<int>(h)) {
      case 0:
        r = 1, gr = x;
        break;
      case 1:
        r = x, gr = 1;
        break;
      case 2:
        gr = 1, b = x;
        break;
      case 3:
        gr = x, b = 1;
        break;
      case 4:
        r = x, b = 1;
        break;
      default:
        r = 1, b = x;
        break;
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<unsigned>(std::lround(r * 255)),
                  static_cast<unsigned>(std::lround(gr * 255)), static_cast<unsigned>(std::lround(b * 255)));
    out.emplace_back(buf);
  }
  return out;
}

bool valid_agent_id(std::string_view id) {
  if (id.empty() || id.size() > 64 || id == server_node().str()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-' || c == '.';
  });
}

const char* to_string(ClientView::Badge b) {
  switch (b) {
    case ClientView::Badge::kUnknown:
      return "unknown";
    case ClientView::Badge::kIntact:
      return "intact";
    case ClientView::Badge::kAlienated:
      return "alienated";
  }
  return "?";
}

Message ClientView::join_request(const AgentId& agent, Role role) const {
  return Message{code_, Join{agent, role, false}};
}

Message ClientView::spectate_request() const {
  return Message{code_, Join{AgentId{}, Role::kOrdinary, true}};
}

Message ClientView::leave_request() const { return Message{code_, Leave{agent_}}; }

Message ClientView::paint(CellPayload payload) {
  if (!joined_ || spectator_) throw Error(ErrorCode::kNonMember, "not joined as a member");
  payload.validate(geometry_);
  const Seq seq = next_seq_++;
  pending_.push_back(PendingEdit{seq, payload});
  return Message{code_, EventMsg{agent_, seq, std::move(payload)}};
}

void ClientView::receive(const Message& m) {
  if (m.code != code_) {
    ++foreign_;
    return;
  }
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, JoinAck>) {
          joined_ = true;
          spectator_ = b.spectator;
          agent_ = b.agent;
          position_ = b.position;
          geometry_ = b.geometry;
          palette_ = b.palette;
          last_tick_ = b.tick;
          last_error_.reset();
        } else if constexpr (std::is_same_v<T, FrameMsg>) {
          frame_ = b.frame;
          last_tick_ = b.tick;
          ++frames_;
          repaint_.clear();
          for (const auto& [pos, _] : b.frame.cells) repaint_.push_back(pos);
          if (position_ && !spectator_) {
            const auto it = b.frame.membership.find(agent_);
            if (it != b.frame.membership.end()) position_ = it->second;
          }
          confirm_from_frame();
        } else if constexpr (std::is_same_v<T, DeltaMsg>) {
          if (!frame_) return;  // nothing to patch yet
          frame_ = apply_diff(std::move(*frame_), b.cells);
          frame_->tick = b.frame_tick;
          frame_->dims = b.dims;
          last_tick_ = b.tick;
          ++frames_;
          repaint_.clear();
          for (const auto& [pos, _] : b.cells) repaint_.push_back(pos);
          confirm_from_frame();
        } else if constexpr (std::is_same_v<T, LeaveAck>) {
          joined_ = false;
          position_.reset();
          last_tick_ = b.tick;
        } else if constexpr (std::is_same_v<T, AuditBadge>) {
          if (b.agent != agent_) return;
          badge_ = b.intact ? Badge::kIntact : Badge::kAlienated;
          last_badge_ = b;
        } else if constexpr (std::is_same_v<T, ErrorMsg>) {
          last_error_ = b;
        }
      },
      m.body);
}

void ClientView::confirm_from_frame() {
  if (!frame_ || !position_ || pending_.empty()) return;
  const Cell* cell = frame_->cell_at(*position_);
  if (!cell || cell->owner != agent_) return;
  // The cell shows one edit; everything queued before it is overwritten.
  const auto shown = std::find_if(pending_.begin(), pending_.end(), [&](const PendingEdit& p) {
    return p.seq == cell->stamp.seq && p.payload == cell->payload;
  });
  if (shown == pending_.end()) return;
  superseded_ += static_cast<std::size_t>(shown - pending_.begin());
  ++confirmed_;
  pending_.erase(pending_.begin(), shown + 1);
}

}  // namespace poietic::wire
