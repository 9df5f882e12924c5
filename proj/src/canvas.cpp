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

#include "poietic/canvas.hpp"

#include <algorithm>

namespace poietic {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateAgent:
      return "duplicate-agent";
    case ErrorCode::kNonMember:
      return "non-member";
    case ErrorCode::kInvalidPayload:
      return "invalid-payload";
    case ErrorCode::kInvalidConfig:
      return "invalid-config";
    case ErrorCode::kTopologyMismatch:
      return "topology-mismatch";
    case ErrorCode::kUnknownAgent:
      return "unknown-agent";
    case ErrorCode::kInsufficientData:
      return "insufficient-data";
    case ErrorCode::kMalformed:
      return "malformed";
    case ErrorCode::kCorruptLog:
      return "corrupt-log";
  }
  return "unknown";
}

const char* to_string(Role role) { return role == Role::kOperator ? "operator" : "ordinary"; }

Role role_from_string(const std::string& s) {
  if (s == "ordinary") return Role::kOrdinary;
  if (s == "operator") return Role::kOperator;
  throw Error(ErrorCode::kMalformed, "unknown role '" + s + "'");
}

bool CellPayload::valid_for(const CellGeometry& g) const {
  if (pixels().size() != g.pixel_count()) return false;
  return std::all_of(pixels().begin(), pixels().end(), [&](std::uint8_t p) { return p < g.palette; });
}

void CellPayload::validate(const CellGeometry& g) const {
  if (!valid_for(g)) {
    throw Error(ErrorCode::kInvalidPayload, "payload must hold " + std::to_string(g.pixel_count()) +
                                                " palette indices below " + std::to_string(g.palette));
  }
}

Canvas::Canvas(CellGeometry geometry) : geometry_(geometry) {}

std::optional<Position> Canvas::position_of(const AgentId& agent) const {
  auto it = membership_.find(agent);
  if (it == membership_.end()) return std::nullopt;
  return it->second;
}

Position Canvas::add_member(const AgentId& agent) {
  if (membership_.contains(agent)) {
    throw Error(ErrorCode::kDuplicateAgent, "agent '" + agent.str() + "' is already a member");
  }
  while (std::size_t{dims_} * dims_ <= membership_.size()) ++dims_;

  std::vector<Position> taken;
  taken.reserve(membership_.size());
  for (const auto& [_, pos] : membership_) taken.push_back(pos);
  std::sort(taken.begin(), taken.end());

  Position slot{};
  bool found = false;
  for (std::uint32_t r = 0; r < dims_ && !found; ++r) {
    for (std::uint32_t c = 0; c < dims_ && !found; ++c) {
      const Position candidate{r, c};
      if (!std::binary_search(taken.begin(), taken.end(), candidate)) {
        slot = candidate;
        found = true;
      }
    }
  }
  // dims_ * dims_ > membership size guarantees a free slot.
  membership_.emplace(agent, slot);
  departed_.erase(agent);
  return slot;
}

void Canvas::remove_member(const AgentId& agent, Tick tick) {
  auto it = membership_.find(agent);
  if (it == membership_.end()) {
    throw Error(ErrorCode::kNonMember, "agent '" + agent.str() + "' is not a member");
  }
  departed_[agent] = Departure{it->second, tick};
  membership_.erase(it);
}

bool Canvas::admits(const Event& e) const {
  if (membership_.contains(e.agent)) return true;
  auto it = departed_.find(e.agent);
  return it != departed_.end() && e.tick < it->second.tick;
}

bool supersedes(const Stamp& stamp, const CellPayload& payload, const AgentId& owner, const Cell& stored) {
  if (stamp != stored.stamp) return stamp > stored.stamp;
  if (payload != stored.payload) return payload > stored.payload;
  return owner > stored.owner;
}

bool Canvas::apply(const Event& e) {
  Position pos;
  if (auto it = membership_.find(e.agent); it != membership_.end()) {
    pos = it->second;
  } else if (auto d = departed_.find(e.agent); d != departed_.end() && e.tick < d->second.tick) {
    pos = d->second.position;
  } else {
    throw Error(ErrorCode::kNonMember, "event from non-member '" + e.agent.str() + "'");
  }
  e.payload.validate(geometry_);

  auto it = cells_.find(pos);
  if (it == cells_.end()) {
    cells_.emplace(pos, Cell{e.payload, e.agent, e.stamp()});
    return true;
  }
  if (!supersedes(e.stamp(), e.payload, e.agent, it->second)) return false;
  it->second = Cell{e.payload, e.agent, e.stamp()};
  return true;
}

void Canvas::adopt_membership(const Membership& membership, std::uint32_t dims) {
  membership_ = membership;
  dims_ = dims;
}

void Canvas::put_cell(const Position& pos, Cell cell) { cells_[pos] = std::move(cell); }

const Cell* Frame::cell_at(const Position& pos) const {
  auto it = cells.find(pos);
  return it == cells.end() ? nullptr : &it->second;
}

Canvas assign_position(Canvas canvas, const AgentId& agent) {
  canvas.add_member(agent);
  return canvas;
}

Canvas apply_event(Canvas canvas, const Event& e) {
  canvas.apply(e);
  return canvas;
}

Canvas merge_events(Canvas canvas, std::span<const Event> events) {
  for (const Event& e : events) canvas.apply(e);
  return canvas;
}

Frame render_frame(const Canvas& canvas, Tick tick) {
  return Frame{tick, canvas.geometry(), canvas.dims(), canvas.membership(), canvas.cells()};
}

FrameDiff diff_frames(const Frame& a, const Frame& b) {
  FrameDiff out;
  auto ia = a.cells.begin();
  auto ib = b.cells.begin();
  while (ia != a.cells.end() || ib != b.cells.end()) {
    if (ib == b.cells.end() || (ia != a.cells.end() && ia->first < ib->first)) {
      out.emplace(ia->first, std::nullopt);
      ++ia;
    } else if (ia == a.cells.end() || ib->first < ia->first) {
      out.emplace(ib->first, ib->second);
      ++ib;
    } else {
      if (!(ia->second == ib->second)) out.emplace(ib->first, ib->second);
      ++ia;
      ++ib;
    }
  }
  return out;
}

Frame apply_diff(Frame base, const FrameDiff& diff) {
  for (const auto& [pos, cell] : diff) {
    if (cell) {
      base.cells[pos] = *cell;
    } else {
      base.cells.erase(pos);
    }
  }
  return base;
}

FramePatch make_patch(const Frame& from, const Frame& to) {
  FramePatch patch{to.tick, to.dims, std::nullopt, diff_frames(from, to)};
  if (from.membership != to.membership) patch.membership = to.membership;
  return patch;
}

Frame apply_patch(Frame base, const FramePatch& patch) {
  base = apply_diff(std::move(base), patch.cells);
  base.tick = patch.tick;
  base.dims = patch.dims;
  if (patch.membership) base.membership = *patch.membership;
  return base;
}

namespace {

void write_geometry(ByteWriter& w, const CellGeometry& g) {
  w.u32(g.side);
  w.u32(g.palette);
}

void write_membership(ByteWriter& w, const Membership& m) {
  w.u32(static_cast<std::uint32_t>(m.size()));
  for (const auto& [agent, pos] : m) {
    w.str(agent.str());
    w.u32(pos.row);
    w.u32(pos.col);
  }
}

void write_cells(ByteWriter& w, const CellMap& cells) {
  w.u32(static_cast<std::uint32_t>(cells.size()));
  for (const auto& [pos, cell] : cells) {
    w.u32(pos.row);
    w.u32(pos.col);
    w.str(cell.owner.str());
    w.u64(cell.stamp.tick);
    w.u64(cell.stamp.seq);
    w.bytes(cell.payload.pixels());
  }
}

}  // namespace

std::vector<std::uint8_t> serialize(const Canvas& canvas) {
  ByteWriter w;
  w.u32(0x31564e43);  // "CNV1"
  write_geometry(w, canvas.geometry());
  w.u32(canvas.dims());
  write_membership(w, canvas.membership());
  w.u32(static_cast<std::uint32_t>(canvas.departed().size()));
  for (const auto& [agent, d] : canvas.departed()) {
    w.str(agent.str());
    w.u32(d.position.row);
    w.u32(d.position.col);
    w.u64(d.tick);
  }
  write_cells(w, canvas.cells());
  return std::move(w).take();
}

std::vector<std::uint8_t> serialize(const Frame& frame) {
  ByteWriter w;
  w.u32(0x314d5246);  // "FRM1"
  w.u64(frame.tick);
  write_geometry(w, frame.geometry);
  w.u32(frame.dims);
  write_membership(w, frame.membership);
  write_cells(w, frame.cells);
  return std::move(w).take();
}

Digest canvas_digest(const Canvas& canvas) { return sha256(serialize(canvas)); }
Digest frame_digest(const Frame& frame) { return sha256(serialize(frame)); }

}  // namespace poietic
