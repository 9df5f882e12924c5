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

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace poietic {

using Tick = std::uint64_t;
using Seq = std::uint64_t;

/// Opaque participant identifier. Ordering is lexicographic on the raw string
/// and is what every canonical serialization uses.
class AgentId {
 public:
  AgentId() = default;
  explicit AgentId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const { return value_; }
  bool empty() const { return value_.empty(); }

  friend auto operator<=>(const AgentId&, const AgentId&) = default;
  friend bool operator==(const AgentId&, const AgentId&) = default;

 private:
  std::string value_;
};

/// Nodes are either agents (DP peers, TP clients) or the TP server.
using NodeId = AgentId;

inline const NodeId& server_node() {
  static const NodeId kServer{"server"};
  return kServer;
}

struct Position {
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend auto operator<=>(const Position&, const Position&) = default;
};

/// Last-writer stamp of a cell. Lexicographic (tick, seq).
struct Stamp {
  Tick tick = 0;
  Seq seq = 0;

  friend auto operator<=>(const Stamp&, const Stamp&) = default;
};

enum class ErrorCode {
  kDuplicateAgent,
  kNonMember,
  kInvalidPayload,
  kInvalidConfig,
  kTopologyMismatch,
  kUnknownAgent,
  kInsufficientData,
  kMalformed,
  kCorruptLog,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Cell resolution and palette size; fixed at session creation.
struct CellGeometry {
  std::uint32_t side = 8;
  std::uint32_t palette = 16;

  std::size_t pixel_count() const { return std::size_t{side} * side; }
  friend bool operator==(const CellGeometry&, const CellGeometry&) = default;
};

/// side x side palette indices, row-major.
class CellPayload {
 public:
  CellPayload() = default;
  explicit CellPayload(std::vector<std::uint8_t> pixels)
      : pixels_(std::make_shared<std::vector<std::uint8_t>>(std::move(pixels))) {}

  static CellPayload blank(const CellGeometry& g) {
    return CellPayload(std::vector<std::uint8_t>(g.pixel_count(), 0));
  }
  static CellPayload filled(const CellGeometry& g, std::uint8_t color) {
    return CellPayload(std::vector<std::uint8_t>(g.pixel_count(), color));
  }

  const std::vector<std::uint8_t>& pixels() const { return pixels_ ? *pixels_ : empty(); }
  /// Copies on write: other payloads sharing the pixels are not affected.
  std::vector<std::uint8_t>& pixels() {
    if (!pixels_) {
      pixels_ = std::make_shared<std::vector<std::uint8_t>>();
    } else if (pixels_.use_count() > 1) {
      pixels_ = std::make_shared<std::vector<std::uint8_t>>(*pixels_);
    }
    return *pixels_;
  }
  std::size_t size() const { return pixels().size(); }

  bool valid_for(const CellGeometry& g) const;
  /// Throws Error(kInvalidPayload) when the payload does not fit `g`.
  void validate(const CellGeometry& g) const;

  friend auto operator<=>(const CellPayload& a, const CellPayload& b) { return a.pixels() <=> b.pixels(); }
  friend bool operator==(const CellPayload& a, const CellPayload& b) {
    return a.pixels_ == b.pixels_ || a.pixels() == b.pixels();
  }

 private:
  static const std::vector<std::uint8_t>& empty() {
    static const std::vector<std::uint8_t> none;
    return none;
  }
  std::shared_ptr<std::vector<std::uint8_t>> pixels_;
};

struct EventKey {
  AgentId agent;
  Seq seq = 0;

  friend auto operator<=>(const EventKey&, const EventKey&) = default;
};

struct EventKeyHash {
  std::size_t operator()(const EventKey& k) const noexcept {
    return std::hash<std::string>{}(k.agent.str()) * 0x9e3779b97f4a7c15ULL ^ std::hash<Seq>{}(k.seq);
  }
};

/// One agent's edit of its own cell.
struct Event {
  AgentId agent;
  Tick tick = 0;
  Seq seq = 0;
  CellPayload payload;

  Stamp stamp() const { return {tick, seq}; }
  EventKey key() const { return {agent, seq}; }
  friend bool operator==(const Event&, const Event&) = default;
};

enum class Role { kOrdinary, kOperator };

const char* to_string(Role role);
Role role_from_string(const std::string& s);

}  // namespace poietic

template <>
struct std::hash<poietic::AgentId> {
  std::size_t operator()(const poietic::AgentId& a) const noexcept {
    return std::hash<std::string>{}(a.str());
  }
};
