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

#include "poietic/session_log.hpp"

#include <fstream>
#include <sstream>

#include "poietic/codec.hpp"

namespace poietic {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

using json = nlohmann::json;
using codec::field;

Channel channel_from(const std::string& s) {
  if (s == "uplink") return Channel::kUplink;
  if (s == "downlink") return Channel::kDownlink;
  if (s == "gossip") return Channel::kGossip;
  throw Error(ErrorCode::kMalformed, "unknown channel '" + s + "'");
}

}  // namespace

Tick record_tick(const Record& r) {
  return std::visit(overloaded{
                        [](const rec::GroundTruth& g) { return g.record.tick; },
                        [](const auto& x) { return x.tick; },
                    },
                    r);
}

const char* record_type(const Record& r) {
  static constexpr const char* kTypes[] = {"genesis",        "join_request", "join_outcome", "leave_request",
                                           "leave_outcome",  "event_sent",   "message_sent", "delivery",
                                           "frame_observed", "quiescent",    "rejected",     "tick_mark",
                                           "ground_truth"};
  return kTypes[r.index()];
}

const rec::Genesis* SessionLog::genesis() const {
  if (records.empty()) return nullptr;
  return std::get_if<rec::Genesis>(&records.front());
}

Tick SessionLog::last_tick() const {
  Tick t = 0;
  for (const Record& r : records) t = std::max(t, record_tick(r));
  return t;
}

SessionLog strip_ground_truth(const SessionLog& log) {
  SessionLog out;
  out.records.reserve(log.records.size());
  for (const Record& r : log.records) {
    if (!std::holds_alternative<rec::GroundTruth>(r)) out.records.push_back(r);
  }
  return out;
}

std::string LogEncoder::encode(const Record& r) {
  json j = std::visit(
      overloaded{
          [&](const rec::Genesis& g) {
            geometry_ = g.geometry;
            return json{{"tick", g.tick},
                        {"session", g.session_id},
                        {"geometry", codec::encode_geometry(g.geometry)},
                        {"topology", to_string(g.topology.kind)},
                        {"fanout", g.topology.fanout},
                        {"code", g.code.hex()},
                        {"schema_version", g.schema_version}};
          },
          [](const rec::JoinRequest& x) {
            return json{{"tick", x.tick}, {"agent", x.agent.str()}, {"role", to_string(x.role)}};
          },
          [](const rec::JoinOutcome& x) {
            return json{{"tick", x.tick},
                        {"agent", x.agent.str()},
                        {"accepted", x.accepted},
                        {"position", x.position ? codec::encode_position(*x.position) : json(nullptr)},
                        {"reason", x.reason}};
          },
          [](const rec::LeaveRequest& x) { return json{{"tick", x.tick}, {"agent", x.agent.str()}}; },
          [](const rec::LeaveOutcome& x) {
            return json{{"tick", x.tick}, {"agent", x.agent.str()}, {"honored", x.honored}};
          },
          [&](const rec::EventSent& x) {
            if (!geometry_) throw Error(ErrorCode::kMalformed, "event before genesis");
            return json{{"tick", x.tick}, {"event", codec::encode_event(x.event, *geometry_)}};
          },
          [](const rec::MessageSent& x) {
            return json{{"tick", x.tick},
                        {"id", x.id},
                        {"from", x.from.str()},
                        {"to", x.to.str()},
                        {"channel", to_string(x.channel)}};
          },
          [](const rec::Delivery& x) {
            return json{{"tick", x.tick},
                        {"id", x.id},
                        {"from", x.from.str()},
                        {"to", x.to.str()},
                        {"sent_tick", x.sent_tick}};
          },
          [&](const rec::FrameObserved& x) {
            if (!geometry_) throw Error(ErrorCode::kMalformed, "frame before genesis");
            static const Frame kEmpty{};
            auto& prev = last_seen_[x.agent];
            const Frame& base = prev ? *prev : kEmpty;
            const FramePatch patch = make_patch(base, *x.frame);
            json out{{"tick", x.tick},
                     {"agent", x.agent.str()},
                     {"frame_tick", patch.tick},
                     {"dims", patch.dims},
                     {"cells", codec::encode_diff(patch.cells, *geometry_)}};
            if (patch.membership || !prev) {
              out["membership"] = codec::encode_membership(x.frame->membership);
            }
            prev = x.frame;
            return out;
          },
          [](const rec::Quiescent& x) {
            return json{{"tick", x.tick}, {"converged", x.converged}, {"rounds", x.rounds}};
          },
          [](const rec::Rejected& x) {
            json out{{"tick", x.tick}, {"node", x.node.str()}, {"reason", x.reason}};
            if (x.event) {
              out["agent"] = x.event->agent.str();
              out["seq"] = x.event->seq;
            }
            return out;
          },
          [](const rec::TickMark& x) { return json{{"tick", x.tick}, {"wall_ms", x.wall_ms}}; },
          [](const rec::GroundTruth& x) { return json{{"record", encode_record(x.record)}}; },
      },
      r);
  j["type"] = record_type(r);
  return j.dump();
}

Record LogDecoder::decode(const json& j) {
  const auto type = field<std::string>(j, "type");
  const auto need_geometry = [&]() -> const CellGeometry& {
    if (!geometry_) throw Error(ErrorCode::kMalformed, type + " before genesis");
    return *geometry_;
  };
  if (type == "genesis") {
    rec::Genesis g;
    g.tick = field<Tick>(j, "tick");
    g.session_id = field<std::string>(j, "session");
    g.geometry = codec::decode_geometry(j.at("geometry"));
    g.topology.kind = topology_from_string(field<std::string>(j, "topology"));
    g.topology.fanout = field<std::uint32_t>(j, "fanout");
    auto code = VanishingCode::from_hex(field<std::string>(j, "code"));
    if (!code) throw Error(ErrorCode::kMalformed, "bad vanishing code");
    g.code = *code;
    g.schema_version = field<int>(j, "schema_version");
    if (g.schema_version != kLogSchemaVersion) {
      throw Error(ErrorCode::kMalformed, "unsupported schema_version " + std::to_string(g.schema_version));
    }
    geometry_ = g.geometry;
    last_seen_.clear();
    return g;
  }
  if (type == "join_request") {
    return rec::JoinRequest{field<Tick>(j, "tick"), AgentId(field<std::string>(j, "agent")),
                            role_from_string(field<std::string>(j, "role"))};
  }
  if (type == "join_outcome") {
    rec::JoinOutcome x{field<Tick>(j, "tick"), AgentId(field<std::string>(j, "agent")),
                       field<bool>(j, "accepted"), std::nullopt, j.value("reason", std::string())};
    if (j.contains("position") && !j.at("position").is_null()) {
      x.position = codec::decode_position(j.at("position"));
    }
    return x;
  }
  if (type == "leave_request") {
    return rec::LeaveRequest{field<Tick>(j, "tick"), AgentId(field<std::string>(j, "agent"))};
  }
  if (type == "leave_outcome") {
    return rec::LeaveOutcome{field<Tick>(j, "tick"), AgentId(field<std::string>(j, "agent")),
                             field<bool>(j, "honored")};
  }
  if (type == "event_sent") {
    return rec::EventSent{field<Tick>(j, "tick"), codec::decode_event(j.at("event"), need_geometry())};
  }
  if (type == "message_sent") {
    return rec::MessageSent{field<Tick>(j, "tick"), field<std::uint64_t>(j, "id"),
                            AgentId(field<std::string>(j, "from")), AgentId(field<std::string>(j, "to")),
                            channel_from(field<std::string>(j, "channel"))};
  }
  if (type == "delivery") {
    return rec::Delivery{field<Tick>(j, "tick"), field<std::uint64_t>(j, "id"),
                         AgentId(field<std::string>(j, "from")), AgentId(field<std::string>(j, "to")),
                         field<Tick>(j, "sent_tick")};
  }
  if (type == "frame_observed") {
    const CellGeometry& g = need_geometry();
    const AgentId agent(field<std::string>(j, "agent"));
    FramePatch patch;
    patch.tick = field<Tick>(j, "frame_tick");
    patch.dims = field<std::uint32_t>(j, "dims");
    patch.cells = codec::decode_diff(j.at("cells"), g);
    if (j.contains("membership")) patch.membership = codec::decode_membership(j.at("membership"));
    auto& prev = last_seen_[agent];
    Frame base = prev ? *prev : Frame{};
    base.geometry = g;
    auto frame = std::make_shared<const Frame>(apply_patch(std::move(base), patch));
    prev = frame;
    return rec::FrameObserved{field<Tick>(j, "tick"), agent, std::move(frame)};
  }
  if (type == "quiescent") {
    return rec::Quiescent{field<Tick>(j, "tick"), field<bool>(j, "converged"),
                          field<std::uint64_t>(j, "rounds")};
  }
  if (type == "rejected") {
    rec::Rejected x{field<Tick>(j, "tick"), AgentId(field<std::string>(j, "node")),
                    field<std::string>(j, "reason"), std::nullopt};
    if (j.contains("agent")) {
      x.event = EventKey{AgentId(field<std::string>(j, "agent")), field<Seq>(j, "seq")};
    }
    return x;
  }
  if (type == "tick_mark") {
    return rec::TickMark{field<Tick>(j, "tick"), field<std::int64_t>(j, "wall_ms")};
  }
  if (type == "ground_truth") {
    return rec::GroundTruth{decode_record(j.at("record"))};
  }
  throw Error(ErrorCode::kMalformed, "unknown record type '" + type + "'");
}

std::string serialize_log(const SessionLog& log) {
  LogEncoder enc;
  std::string out;
  for (const Record& r : log.records) {
    out += enc.encode(r);
    out.push_back('\n');
  }
  return out;
}

ReplayResult parse_log(std::string_view bytes) {
  ReplayResult result;
  LogDecoder dec;
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t nl = bytes.find('\n', offset);
    const bool last = nl == std::string_view::npos || nl + 1 == bytes.size();
    const std::string_view line =
        bytes.substr(offset, nl == std::string_view::npos ? std::string_view::npos : nl - offset);
    if (nl == std::string_view::npos) {
      // No terminator: the writer died mid-append.
      result.warnings.push_back("truncated final record at byte offset " + std::to_string(offset) +
                                " dropped");
      break;
    }
    if (line.empty()) {
      offset = nl + 1;
      result.bytes_consumed = offset;
      continue;
    }
    try {
      result.log.records.push_back(dec.decode(json::parse(line)));
    } catch (const std::exception& e) {
      if (last) {
        result.warnings.push_back("unreadable final record at byte offset " + std::to_string(offset) +
                                  " dropped: " + e.what());
        break;
      }
      throw Error(ErrorCode::kCorruptLog,
                  "corrupt record at byte offset " + std::to_string(offset) + ": " + e.what());
    }
    offset = nl + 1;
    result.bytes_consumed = offset;
  }
  if (!result.log.records.empty() && !result.log.genesis()) {
    throw Error(ErrorCode::kCorruptLog, "log does not start with a genesis record");
  }
  return result;
}

ReplayResult read_log_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kCorruptLog, "cannot open log " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_log(ss.str());
}

LogWriter::LogWriter(const std::filesystem::path& path, bool truncate) : path_(path) {
  file_ = std::fopen(path.c_str(), truncate ? "wb" : "ab");
  if (!file_) throw Error(ErrorCode::kCorruptLog, "cannot open log " + path.string() + " for writing");
}

LogWriter::~LogWriter() {
  if (file_) std::fclose(file_);
}

void LogWriter::append(const Record& r) {
  std::string line = encoder_.encode(r);
  line.push_back('\n');
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
    throw Error(ErrorCode::kCorruptLog, "write to " + path_.string() + " failed");
  }
}

void LogWriter::prime(const SessionLog& existing) {
  for (const Record& r : existing.records) encoder_.encode(r);
}

}  // namespace poietic
