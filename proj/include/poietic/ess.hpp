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

// Quality-versus-signalling point clouds and their coarse shape.

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "poietic/session_log.hpp"

namespace poietic {

struct EssPoint {
  AgentId agent;
  double q = 0.0;
  double y = 0.0;  // events per member tick

  friend bool operator==(const EssPoint&, const EssPoint&) = default;
};

enum class ShapeLabel { kS, kZ, kIndeterminate };
const char* to_string(ShapeLabel s);

inline constexpr std::size_t kMinEssPoints = 30;

/// One point per admitted agent. Member ticks are the ticks in
/// [max(join, 1), min(leave - 1, last_active)] during which policies run.
std::vector<EssPoint> ess_points(const SessionLog& log, const std::map<AgentId, double>& quality,
                                 Tick last_active);

struct TertileMeans {
  double m1 = 0.0, m2 = 0.0, m3 = 0.0;
  std::size_t n1 = 0, n2 = 0, n3 = 0;
};

/// Splits [min q, max q] into three equal bands; empty bands have mean 0 and n 0.
TertileMeans tertile_means(std::span<const EssPoint> points);

/// S: middle band above both others. Z: below both. Throws
/// kInsufficientData with fewer than kMinEssPoints points.
ShapeLabel classify_ess_shape(std::span<const EssPoint> points);

/// CSV with header "agent,q,y".
std::string ess_to_csv(std::span<const EssPoint> points);
std::vector<EssPoint> ess_from_csv(const std::string& text);
std::vector<EssPoint> read_ess_file(const std::filesystem::path& path);

}  // namespace poietic
