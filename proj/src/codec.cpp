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

#include "poietic/codec.hpp"

namespace poietic::codec {

namespace {

constexpr char kDigits[] = "0123456789abcdef";

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

std::string encode_pixels(const CellPayload& payload, const CellGeometry& g) {
  std::string out;
  const bool narrow = g.palette <= 16;
  out.reserve(payload.size() * (narrow ? 1 : 2));
  for (std::uint8_t p : payload.pixels()) {
    if (!narrow) out.push_back(kDigits[p >> 4]);
    out.push_back(kDigits[p & 0xf]);
  }
  return out;
}

CellPayload decode_pixels(const std::string& text, const CellGeometry& g) {
  const std::size_t width = g.palette <= 16 ? 1 : 2;
  if (text.size() != g.pixel_count() * width) {
    throw Error(ErrorCode::kMalformed, "pixel string has wrong length");
  }
  std::vector<std::uint8_t> px(g.pixel_count());
  for (std::size_t i = 0; i < px.size(); ++i) {
    int v = 0;
    for (std::size_t k = 0; k < width; ++k) {
      const int n = nibble(text[i * width + k]);
      if (n < 0) throw Error(ErrorCode::kMalformed, "pixel string is not lowercase hex");
      v = (v << 4) | n;
    }
    px[i] = static_cast<std::uint8_t>(v);
  }
  CellPayload payload(std::move(px));
  payload.validate(g);
  return payload;
}

json encode_geometry(const CellGeometry& g) { return json{{"cell_side", g.side}, {"palette", g.palette}}; }

CellGeometry decode_geometry(const json& j) {
  CellGeometry g{field<std::uint32_t>(j, "cell_side"), field<std::uint32_t>(j, "palette")};
  if (g.side == 0 || g.side > 64 || g.palette < 2 || g.palette > 256) {
    throw Error(ErrorCode::kInvalidConfig, "cell_side must be 1..64 and palette 2..256");
  }
  return g;
}

json encode_position(const Position& p) { return json::array({p.row, p.col}); }

Position decode_position(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::kMalformed, "position must be [row, col]");
  try {
    return Position{unsigned_value<std::uint32_t>(j[0]), unsigned_value<std::uint32_t>(j[1])};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, std::string("bad position: ") + e.what());
  }
}

json encode_event(const Event& e, const CellGeometry& g) {
  return json{
      {"agent", e.agent.str()}, {"tick", e.tick}, {"seq", e.seq}, {"pixels", encode_pixels(e.payload, g)}};
}

Event decode_event(const json& j, const CellGeometry& g) {
  return Event{AgentId(field<std::string>(j, "agent")), field<Tick>(j, "tick"), field<Seq>(j, "seq"),
               decode_pixels(field<std::string>(j, "pixels"), g)};
}

json encode_cell(const Position& pos, const Cell& cell, const CellGeometry& g) {
  return json{{"row", pos.row},          {"col", pos.col},        {"owner", cell.owner.str()},
              {"tick", cell.stamp.tick}, {"seq", cell.stamp.seq}, {"pixels", encode_pixels(cell.payload, g)}};
}

std::pair<Position, Cell> decode_cell(const json& j, const CellGeometry& g) {
  Position pos{field<std::uint32_t>(j, "row"), field<std::uint32_t>(j, "col")};
  Cell cell{decode_pixels(field<std::string>(j, "pixels"), g), AgentId(field<std::string>(j, "owner")),
            Stamp{field<Tick>(j, "tick"), field<Seq>(j, "seq")}};
  return {pos, std::move(cell)};
}

json encode_membership(const Membership& m) {
  json out = json::object();
  for (const auto& [agent, pos] : m) out[agent.str()] = encode_position(pos);
  return out;
}

Membership decode_membership(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kMalformed, "membership must be an object");
  Membership m;
  for (auto it = j.begin(); it != j.end(); ++it) {
    m.emplace(AgentId(it.key()), decode_position(it.value()));
  }
  return m;
}

json encode_cells(const CellMap& cells, const CellGeometry& g) {
  json out = json::array();
  for (const auto& [pos, cell] : cells) out.push_back(encode_cell(pos, cell, g));
  return out;
}

CellMap decode_cells(const json& j, const CellGeometry& g) {
  if (!j.is_array()) throw Error(ErrorCode::kMalformed, "cells must be an array");
  CellMap cells;
  for (const auto& item : j) {
    auto [pos, cell] = decode_cell(item, g);
    cells[pos] = std::move(cell);
  }
  return cells;
}

json encode_diff(const FrameDiff& diff, const CellGeometry& g) {
  json out = json::array();
  for (const auto& [pos, cell] : diff) {
    if (cell) {
      out.push_back(encode_cell(pos, *cell, g));
    } else {
      out.push_back(json{{"row", pos.row}, {"col", pos.col}, {"removed", true}});
    }
  }
  return out;
}

FrameDiff decode_diff(const json& j, const CellGeometry& g) {
  if (!j.is_array()) throw Error(ErrorCode::kMalformed, "diff must be an array");
  FrameDiff diff;
  for (const auto& item : j) {
    if (item.value("removed", false)) {
      diff[Position{field<std::uint32_t>(item, "row"), field<std::uint32_t>(item, "col")}] = std::nullopt;
    } else {
      auto [pos, cell] = decode_cell(item, g);
      diff[pos] = std::move(cell);
    }
  }
  return diff;
}

json encode_frame(const Frame& f) {
  return json{{"tick", f.tick},
              {"dims", f.dims},
              {"membership", encode_membership(f.membership)},
              {"cells", encode_cells(f.cells, f.geometry)}};
}

Frame decode_frame(const json& j, const CellGeometry& g) {
  Frame f;
  f.tick = field<Tick>(j, "tick");
  f.geometry = g;
  f.dims = field<std::uint32_t>(j, "dims");
  f.membership = decode_membership(j.at("membership"));
  f.cells = decode_cells(j.at("cells"), g);
  return f;
}

}  // namespace poietic::codec
