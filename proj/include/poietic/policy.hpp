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

// Scripted agent behaviours. A policy sees the frame its agent last
// observed and decides whether to edit the agent's own cell this tick.

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "poietic/canvas.hpp"
#include "poietic/rng.hpp"

namespace poietic {

/// Piecewise-linear signalling rate r(q) over quality q in [0, 1]. Points
/// are (q, r) with strictly increasing q; r is clamped outside the range.
class RateTable {
 public:
  RateTable() = default;
  explicit RateTable(std::vector<std::pair<double, double>> points);

  double at(double q) const;
  const std::vector<std::pair<double, double>>& points() const { return points_; }

  /// "S-default", "S-prime", "Z-default", "linear" (r = q) or "flat".
  static RateTable preset(const std::string& name);
  static std::vector<std::string> preset_names();

  friend bool operator==(const RateTable&, const RateTable&) = default;

 private:
  std::vector<std::pair<double, double>> points_;
};

struct RandomPainter {
  double p = 0.5;  // edit probability per tick
  friend bool operator==(const RandomPainter&, const RandomPainter&) = default;
};

/// Fills its cell with the majority colour of the 8 neighbouring cells.
struct Mimic {
  double p = 0.5;
  friend bool operator==(const Mimic&, const Mimic&) = default;
};

struct Signaler {
  RateTable table = RateTable::preset("S-default");
  std::string preset = "S-default";  // empty for a custom table
  friend bool operator==(const Signaler&, const Signaler&) = default;
};

using AgentPolicy = std::variant<RandomPainter, Mimic, Signaler>;

std::string policy_name(const AgentPolicy& p);
/// Edit probability of `p` for an agent of quality `q`.
double edit_rate(const AgentPolicy& p, double q);

/// Majority palette index over the cells around `self` in `obs`; missing
/// neighbours inside the grid count as blank. Ties go to the lowest index.
std::uint8_t neighbour_majority(const Frame& obs, const Position& self, const CellGeometry& g);

/// At most one event per call. `obs` is the agent's latest observation (an
/// empty frame before the first one arrives).
std::vector<Event> agent_policy_step(const AgentPolicy& policy, const Frame& obs, const AgentId& self,
                                     std::optional<Position> position, double q, Rng& rng,
                                     const CellGeometry& g, Tick tick, Seq seq);

nlohmann::json encode_policy(const AgentPolicy& p);
/// Object form {"kind": ..., ...} or the shorthand string "random_painter",
/// "random_painter:0.3", "mimic", "signaler:S-default". Throws kInvalidConfig.
AgentPolicy decode_policy(const nlohmann::json& j);
AgentPolicy policy_from_string(const std::string& spec);

}  // namespace poietic
