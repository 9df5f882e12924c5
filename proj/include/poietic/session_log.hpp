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

// Append-only session record. One JSON object per line; the first line is
// the genesis record. Observed frames are stored as patches against the same
// agent's previous observation, so a reader must replay from the start.

#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "poietic/canvas.hpp"
#include "poietic/noloop.hpp"
#include "poietic/topology.hpp"

namespace poietic {

inline constexpr int kLogSchemaVersion = 1;

namespace rec {

struct Genesis {
  Tick tick = 0;
  std::string session_id;
  CellGeometry geometry;
  Topology topology;
  VanishingCode code;
  int schema_version = kLogSchemaVersion;

  friend bool operator==(const Genesis&, const Genesis&) = default;
};
struct JoinRequest {
  Tick tick = 0;
  AgentId agent;
  Role role = Role::kOrdinary;

  friend bool operator==(const JoinRequest&, const JoinRequest&) = default;
};
struct JoinOutcome {
  Tick tick = 0;
  AgentId agent;
  bool accepted = true;
  std::optional<Position> position;
  std::string reason;

  friend bool operator==(const JoinOutcome&, const JoinOutcome&) = default;
};
struct LeaveRequest {
  Tick tick = 0;
  AgentId agent;

  friend bool operator==(const LeaveRequest&, const LeaveRequest&) = default;
};
struct LeaveOutcome {
  Tick tick = 0;
  AgentId agent;
  bool honored = true;

  friend bool operator==(const LeaveOutcome&, const LeaveOutcome&) = default;
};
struct EventSent {
  Tick tick = 0;
  Event event;

  friend bool operator==(const EventSent&, const EventSent&) = default;
};
struct MessageSent {
  Tick tick = 0;
  std::uint64_t id = 0;
  NodeId from;
  NodeId to;
  Channel channel = Channel::kUplink;

  friend bool operator==(const MessageSent&, const MessageSent&) = default;
};
struct Delivery {
  Tick tick = 0;
  std::uint64_t id = 0;  // 0: nobody honestly sent it
  NodeId from;
  NodeId to;
  Tick sent_tick = 0;

  friend bool operator==(const Delivery&, const Delivery&) = default;
};
struct FrameObserved {
  Tick tick = 0;
  AgentId agent;
  std::shared_ptr<const Frame> frame;

  /// Compares frame contents, not pointers.
  friend bool operator==(const FrameObserved& a, const FrameObserved& b) {
    return a.tick == b.tick && a.agent == b.agent &&
           (a.frame == b.frame || (a.frame && b.frame && *a.frame == *b.frame));
  }
};
struct Quiescent {
  Tick tick = 0;
  bool converged = false;
  std::uint64_t rounds = 0;

  friend bool operator==(const Quiescent&, const Quiescent&) = default;
};
struct Rejected {
  Tick tick = 0;
  NodeId node;
  std::string reason;
  std::optional<EventKey> event;

  friend bool operator==(const Rejected&, const Rejected&) = default;
};
/// Live mode only: wall-clock annotation for a logical tick.
struct TickMark {
  Tick tick = 0;
  std::int64_t wall_ms = 0;

  friend bool operator==(const TickMark&, const TickMark&) = default;
};
/// Simulation ground truth. Stripped before auditing.
struct GroundTruth {
  InterceptionRecord record;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

}  // namespace rec

using Record =
    std::variant<rec::Genesis, rec::JoinRequest, rec::JoinOutcome, rec::LeaveRequest, rec::LeaveOutcome,
                 rec::EventSent, rec::MessageSent, rec::Delivery, rec::FrameObserved, rec::Quiescent,
                 rec::Rejected, rec::TickMark, rec::GroundTruth>;

Tick record_tick(const Record& r);
const char* record_type(const Record& r);

struct SessionLog {
  std::vector<Record> records;

  const rec::Genesis* genesis() const;
  Tick last_tick() const;
  bool empty() const { return records.empty(); }
};

/// Same log without GroundTruth records.
SessionLog strip_ground_truth(const SessionLog& log);

/// Stateful line encoder (frames are delta-encoded per agent).
class LogEncoder {
 public:
  std::string encode(const Record& r);

 private:
  std::optional<CellGeometry> geometry_;
  std::map<AgentId, std::shared_ptr<const Frame>> last_seen_;
};

class LogDecoder {
 public:
  Record decode(const nlohmann::json& j);

 private:
  std::optional<CellGeometry> geometry_;
  std::map<AgentId, std::shared_ptr<const Frame>> last_seen_;
};

std::string serialize_log(const SessionLog& log);

struct ReplayResult {
  SessionLog log;
  std::vector<std::string> warnings;
  std::size_t bytes_consumed = 0;  // through the last whole record
};

/// Parses a log. A damaged final record (crash mid-append) is dropped with a
/// warning; damage anywhere else throws Error(kCorruptLog) naming the byte offset.
ReplayResult parse_log(std::string_view bytes);
ReplayResult read_log_file(const std::filesystem::path& path);

/// Durable appender: every record is flushed before append() returns.
class LogWriter {
 public:
  explicit LogWriter(const std::filesystem::path& path, bool truncate = true);
  ~LogWriter();
  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;

  void append(const Record& r);
  /// Re-primes the delta encoder after resuming on an existing file.
  void prime(const SessionLog& existing);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  LogEncoder encoder_;
};

}  // namespace poietic
