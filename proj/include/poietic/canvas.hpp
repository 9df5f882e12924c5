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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "poietic/digest.hpp"
#include "poietic/types.hpp"

namespace poietic {

/// Stored cell content plus the identity and stamp of the event that wrote it.
struct Cell {
  CellPayload payload;
  AgentId owner;
  Stamp stamp;

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Where a departed agent sat and when it left. Kept until the agent rejoins
/// so that events sent before the leave still merge everywhere, even after
/// the slot has a new owner (whose later stamps always win).
struct Departure {
  Position position;
  Tick tick = 0;

  friend bool operator==(const Departure&, const Departure&) = default;
};

using Membership = std::map<AgentId, Position>;
using CellMap = std::map<Position, Cell>;

/// Global mosaic state. Each live agent owns exactly one slot of a
/// dims x dims grid; cells hold last-writer-wins content.
class Canvas {
 public:
  explicit Canvas(CellGeometry geometry = {});

  const CellGeometry& geometry() const { return geometry_; }
  std::uint32_t dims() const { return dims_; }
  const Membership& membership() const { return membership_; }
  const CellMap& cells() const { return cells_; }
  const std::map<AgentId, Departure>& departed() const { return departed_; }

  bool is_member(const AgentId& agent) const { return membership_.contains(agent); }
  std::optional<Position> position_of(const AgentId& agent) const;

  /// Binds `agent` to the lowest free row-major slot, growing the grid to the
  /// next square when every slot is taken. Throws kDuplicateAgent.
  Position add_member(const AgentId& agent);
  /// Frees the agent's slot; its cell keeps the last payload. Throws kNonMember.
  void remove_member(const AgentId& agent, Tick tick);

  /// Whether `e` may touch this canvas: a live member, or a departed agent
  /// whose event predates its leave.
  bool admits(const Event& e) const;

  /// Returns true when the cell changed. Stale events are absorbed.
  /// Throws kNonMember when !admits(e) and kInvalidPayload on bad pixels.
  bool apply(const Event& e);

  /// Replaces membership and grid size wholesale (clients adopting a frame).
  void adopt_membership(const Membership& membership, std::uint32_t dims);
  /// Overwrites one cell unconditionally (clients adopting server truth).
  void put_cell(const Position& pos, Cell cell);

  friend bool operator==(const Canvas&, const Canvas&) = default;

 private:
  CellGeometry geometry_;
  std::uint32_t dims_ = 0;
  Membership membership_;
  CellMap cells_;
  std::map<AgentId, Departure> departed_;
};

/// Total order used to resolve writes to one cell. Equal stamps (only
/// possible for forged duplicates) fall back to payload then owner so merge
/// stays order-invariant.
bool supersedes(const Stamp& stamp, const CellPayload& payload, const AgentId& owner, const Cell& stored);

/// Broadcastable snapshot of a canvas.
struct Frame {
  Tick tick = 0;
  CellGeometry geometry;
  std::uint32_t dims = 0;
  Membership membership;
  CellMap cells;

  const Cell* cell_at(const Position& pos) const;
  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Positions where two frames differ; nullopt marks a cell absent in the target.
using FrameDiff = std::map<Position, std::optional<Cell>>;

Canvas assign_position(Canvas canvas, const AgentId& agent);
Canvas apply_event(Canvas canvas, const Event& e);
/// Folds apply_event over `events`; the result does not depend on their order.
Canvas merge_events(Canvas canvas, std::span<const Event> events);
Frame render_frame(const Canvas& canvas, Tick tick);
FrameDiff diff_frames(const Frame& a, const Frame& b);
Frame apply_diff(Frame base, const FrameDiff& diff);

/// Everything needed to turn one frame into another: the cell diff plus the
/// target's tick, grid size and (when it changed) membership.
struct FramePatch {
  Tick tick = 0;
  std::uint32_t dims = 0;
  std::optional<Membership> membership;
  FrameDiff cells;

  friend bool operator==(const FramePatch&, const FramePatch&) = default;
};

FramePatch make_patch(const Frame& from, const Frame& to);
Frame apply_patch(Frame base, const FramePatch& patch);

/// Canonical little-endian encodings; identical state gives identical bytes.
std::vector<std::uint8_t> serialize(const Canvas& canvas);
std::vector<std::uint8_t> serialize(const Frame& frame);
Digest canvas_digest(const Canvas& canvas);
Digest frame_digest(const Frame& frame);

}  // namespace poietic
