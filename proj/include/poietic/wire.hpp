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

// Live-session wire protocol: one JSON object per line, keys sorted. Every
// message carries {"v": 1, "kind": ..., "code": <session code hex>}; the
// remaining fields depend on the kind (see docs/protocol.md).

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "poietic/auditor.hpp"
#include "poietic/canvas.hpp"
#include "poietic/topology.hpp"

namespace poietic::wire {

inline constexpr int kProtocolVersion = 1;
/// Longest accepted line, newline excluded.
inline constexpr std::size_t kMaxLineBytes = 1 << 20;

enum class Kind { kJoin, kJoinAck, kEvent, kFrame, kDelta, kLeave, kLeaveAck, kAuditBadge, kError };
const char* to_string(Kind k);
std::optional<Kind> kind_from_string(std::string_view s);
/// Kinds a client may send.
bool client_kind(Kind k);

/// ERROR reasons.
namespace reason {
inline constexpr const char* kCodeMismatch = "code-mismatch";
inline constexpr const char* kAdmissionRefused = "admission-refused";
inline constexpr const char* kUnknownAgent = "unknown-agent";
inline constexpr const char* kNonMember = "non-member";
inline constexpr const char* kDuplicateAgent = "duplicate-agent";
inline constexpr const char* kMalformed = "malformed";
inline constexpr const char* kUnknownKind = "unknown-kind";
inline constexpr const char* kUnexpectedKind = "unexpected-kind";
}  // namespace reason

struct Join {
  AgentId agent;  // empty for spectators
  Role role = Role::kOrdinary;
  bool spectator = false;
  friend bool operator==(const Join&, const Join&) = default;
};

struct JoinAck {
  AgentId agent;
  std::optional<Position> position;  // nullopt for spectators
  CellGeometry geometry;
  std::vector<std::string> palette;  // "#rrggbb" per palette index
  std::string session;
  TopologyKind topology = TopologyKind::kTP;
  Tick tick = 0;
  bool spectator = false;
  friend bool operator==(const JoinAck&, const JoinAck&) = default;
};

/// An edit of the sender's own cell. The service stamps the tick.
struct EventMsg {
  AgentId agent;
  Seq seq = 0;
  CellPayload payload;
  friend bool operator==(const EventMsg&, const EventMsg&) = default;
};

struct FrameMsg {
  Tick tick = 0;  // service tick the frame was delivered at
  Frame frame;
  friend bool operator==(const FrameMsg&, const FrameMsg&) = default;
};

/// Changes since the recipient's previous FRAME/DELTA. Membership changes
/// always come as a FRAME, so a DELTA never carries one.
struct DeltaMsg {
  Tick tick = 0;
  Tick frame_tick = 0;
  std::uint32_t dims = 0;
  FrameDiff cells;
  friend bool operator==(const DeltaMsg&, const DeltaMsg&) = default;
};

struct Leave {
  AgentId agent;
  friend bool operator==(const Leave&, const Leave&) = default;
};

struct LeaveAck {
  AgentId agent;
  Tick tick = 0;
  friend bool operator==(const LeaveAck&, const LeaveAck&) = default;
};

/// Summary of the recipient's TraceReport at `tick`.
struct AuditBadge {
  AgentId agent;
  Tick tick = 0;
  bool intact = true;
  std::size_t events = 0;
  std::size_t satisfied = 0;
  std::size_t superseded = 0;
  std::size_t pending = 0;
  std::vector<TraceEvidence> failed;
  friend bool operator==(const AuditBadge&, const AuditBadge&) = default;
};

struct ErrorMsg {
  std::string reason;
  std::string detail;
  friend bool operator==(const ErrorMsg&, const ErrorMsg&) = default;
};

using Body = std::variant<Join, JoinAck, EventMsg, FrameMsg, DeltaMsg, Leave, LeaveAck, AuditBadge, ErrorMsg>;

struct Message {
  VanishingCode code;
  Body body;

  Kind kind() const { return static_cast<Kind>(body.index()); }
  friend bool operator==(const Message&, const Message&) = default;
};

/// Thrown by decode(); `reason` is one of the ERROR reasons.
class WireError : public std::runtime_error {
 public:
  WireError(std::string reason, const std::string& detail)
      : std::runtime_error(detail), reason_(std::move(reason)) {}
  const std::string& reason() const { return reason_; }

 private:
  std::string reason_;
};

/// One line including the trailing newline. Pixels and cells are encoded
/// for geometry `g`.
std::string encode(const Message& m, const CellGeometry& g);
/// Parses one line (trailing newline optional). Throws WireError with
/// reason malformed or unknown-kind; the code is not checked here.
Message decode(std::string_view line, const CellGeometry& g);

AuditBadge make_badge(const TraceReport& report, Tick tick);
/// Fixed swatches for the first 16 indices, then an evenly spaced hue wheel.
std::vector<std::string> palette_colors(std::uint32_t count);
/// Agent ids on the wire: 1-64 characters from [A-Za-z0-9_.-], not "server".
bool valid_agent_id(std::string_view id);

/// Client-side session state. Own edits stay pending until a frame from the
/// service shows them; the badge is whatever the last AUDIT_BADGE said.
class ClientView {
 public:
  enum class Badge { kUnknown, kIntact, kAlienated };
  struct PendingEdit {
    Seq seq = 0;
    CellPayload payload;
  };

  explicit ClientView(VanishingCode code) : code_(code) {}

  const VanishingCode& code() const { return code_; }
  Message join_request(const AgentId& agent, Role role = Role::kOrdinary) const;
  Message spectate_request() const;
  Message leave_request() const;
  /// Queues an own-cell edit as pending and returns the EVENT to send.
  /// Throws Error(kNonMember) before a successful JOIN_ACK.
  Message paint(CellPayload payload);

  /// Decodes with the session geometry once known.
  Message decode(std::string_view line) const { return wire::decode(line, geometry_); }
  std::string encode(const Message& m) const { return wire::encode(m, geometry_); }
  /// Applies one message from the service. Messages with another session
  /// code are ignored and counted.
  void receive(const Message& m);

  bool joined() const { return joined_; }
  bool spectator() const { return spectator_; }
  const AgentId& agent() const { return agent_; }
  std::optional<Position> position() const { return position_; }
  const CellGeometry& geometry() const { return geometry_; }
  const std::vector<std::string>& palette() const { return palette_; }
  const std::optional<Frame>& frame() const { return frame_; }
  Tick last_tick() const { return last_tick_; }
  const std::vector<PendingEdit>& pending() const { return pending_; }
  std::size_t confirmed() const { return confirmed_; }
  /// Pending edits dropped because a later own edit was confirmed first.
  std::size_t superseded() const { return superseded_; }
  Badge badge() const { return badge_; }
  const std::optional<AuditBadge>& last_badge() const { return last_badge_; }
  const std::optional<ErrorMsg>& last_error() const { return last_error_; }
  std::size_t foreign_messages() const { return foreign_; }
  std::size_t frames_received() const { return frames_; }
  /// The most recent DELTA's cell positions (what a renderer repaints).
  const std::vector<Position>& last_repaint() const { return repaint_; }

 private:
  void confirm_from_frame();

  VanishingCode code_;
  CellGeometry geometry_;
  std::vector<std::string> palette_;
  bool joined_ = false;
  bool spectator_ = false;
  AgentId agent_;
  std::optional<Position> position_;
  std::optional<Frame> frame_;
  Tick last_tick_ = 0;
  Seq next_seq_ = 0;
  std::vector<PendingEdit> pending_;
  std::size_t confirmed_ = 0;
  std::size_t superseded_ = 0;
  Badge badge_ = Badge::kUnknown;
  std::optional<AuditBadge> last_badge_;
  std::optional<ErrorMsg> last_error_;
  std::size_t foreign_ = 0;
  std::size_t frames_ = 0;
  std::vector<Position> repaint_;
};

const char* to_string(ClientView::Badge b);

}  // namespace poietic::wire
