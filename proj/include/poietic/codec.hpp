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

// JSON encodings shared by the session log and the wire protocol. Keys are
// emitted in sorted order (nlohmann::json's object map), so identical values
// always dump to identical text.

#pragma once

#include <limits>
#include <string>
#include <type_traits>

#include "json.hpp"
#include "poietic/canvas.hpp"

namespace poietic::codec {

using json = nlohmann::json;

/// One hex digit per pixel when the palette fits in a nibble, two otherwise.
std::string encode_pixels(const CellPayload& payload, const CellGeometry& g);
CellPayload decode_pixels(const std::string& text, const CellGeometry& g);

json encode_geometry(const CellGeometry& g);
CellGeometry decode_geometry(const json& j);

json encode_position(const Position& p);
Position decode_position(const json& j);

json encode_event(const Event& e, const CellGeometry& g);
Event decode_event(const json& j, const CellGeometry& g);

json encode_cell(const Position& pos, const Cell& cell, const CellGeometry& g);
std::pair<Position, Cell> decode_cell(const json& j, const CellGeometry& g);

json encode_membership(const Membership& m);
Membership decode_membership(const json& j);

json encode_cells(const CellMap& cells, const CellGeometry& g);
CellMap decode_cells(const json& j, const CellGeometry& g);

/// Cell diff as a list; removed cells appear as {"row","col","removed":true}.
json encode_diff(const FrameDiff& diff, const CellGeometry& g);
FrameDiff decode_diff(const json& j, const CellGeometry& g);

json encode_frame(const Frame& f);
Frame decode_frame(const json& j, const CellGeometry& g);

/// Non-negative integer that fits in T; negatives and fractions throw kMalformed.
template <typename T>
T unsigned_value(const json& v) {
  const bool non_negative = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (!non_negative || v.get<std::uint64_t>() > std::numeric_limits<T>::max()) {
    throw Error(ErrorCode::kMalformed, "expected a non-negative integer, got " + v.dump());
  }
  return v.get<T>();
}

/// Reads a required field, converting nlohmann's exceptions into kMalformed.
template <typename T>
T field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCode::kMalformed, std::string("missing field '") + key + "'");
  }
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      try {
        return unsigned_value<T>(*it);
      } catch (const Error& e) {
        throw Error(ErrorCode::kMalformed, std::string("bad field '") + key + "': " + e.what());
      }
    }
    return it->template get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace poietic::codec
