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

// Scenario files: a versioned JSON document that fully determines a
// simulated run given its seed.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "poietic/auditor.hpp"
#include "poietic/noloop.hpp"
#include "poietic/policy.hpp"
#include "poietic/topology.hpp"

namespace poietic {

inline constexpr int kScenarioSchemaVersion = 1;

enum class PeerGraph { kComplete, kRing };
const char* to_string(PeerGraph g);

struct QualitySpread {
  double lo = 0.0, hi = 1.0;  // evenly spaced across the group
};
struct QualityUniform {
  double lo = 0.0, hi = 1.0;  // drawn from the scenario seed
};
using QualitySpec = std::variant<double, QualitySpread, QualityUniform>;

struct AgentGroup {
  std::uint32_t count = 1;
  AgentPolicy policy = RandomPainter{};
  QualitySpec quality = 0.5;
  Role role = Role::kOrdinary;
  Tick join_tick = 0;
  std::optional<Tick> leave_tick;
};

/// One concrete agent of the roster.
struct AgentSpec {
  AgentId id;
  AgentPolicy policy;
  double q = 0.5;
  Role role = Role::kOrdinary;
  Tick join_tick = 0;
  std::optional<Tick> leave_tick;
};

struct ScenarioConfig {
  int schema_version = kScenarioSchemaVersion;
  std::string session = "session";
  CellGeometry geometry;
  Topology topology;
  PeerGraph peer_graph = PeerGraph::kComplete;
  Tick duration = 200;
  Tick drain = 100;  // extra policy-free ticks allowed for quiescence
  std::uint64_t seed = 0;
  std::vector<AgentGroup> agents;
  std::vector<NoloopConfig> noloops;
  AuditParams audit;

  /// Agents a1..aN in group order.
  std::vector<AgentSpec> roster() const;
  GenesisConfig genesis() const { return GenesisConfig{session, geometry, topology}; }
};

/// Every problem with `cfg`; empty when valid.
std::vector<std::string> validate_scenario(const ScenarioConfig& cfg);
/// Throws Error(kInvalidConfig) listing every problem at once.
void require_valid(const ScenarioConfig& cfg);

/// Parses and validates. All parse and validation problems are collected
/// into a single kInvalidConfig error.
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig parse_scenario_text(const std::string& text);
ScenarioConfig load_scenario(const std::filesystem::path& path);
nlohmann::json encode_scenario(const ScenarioConfig& cfg);

}  // namespace poietic
