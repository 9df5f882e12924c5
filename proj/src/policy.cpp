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

#include "poietic/policy.hpp"

#include <algorithm>
#include <array>

#include "poietic/codec.hpp"

namespace poietic {

namespace {

using json = nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidConfig, what + " must lie in [0, 1]");
}

CellPayload random_pixels(const CellGeometry& g, Rng& rng) {
  std::vector<std::uint8_t> px(g.pixel_count());
  for (auto& p : px) p = static_cast<std::uint8_t>(rng.below(g.palette));
  return CellPayload(std::move(px));
}

}  // namespace

RateTable::RateTable(std::vector<std::pair<double, double>> points) : points_(std::move(points)) {
  if (points_.empty()) throw Error(ErrorCode::kInvalidConfig, "rate table needs at least one point");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    check_probability(points_[i].first, "rate table q");
    check_probability(points_[i].second, "rate table r");
    if (i > 0 && !(points_[i].first > points_[i - 1].first)) {
      throw Error(ErrorCode::kInvalidConfig, "rate table q values must increase strictly");
    }
  }
}

double RateTable::at(double q) const {
  if (points_.empty()) return 0.0;
  if (q <= points_.front().first) return points_.front().second;
  if (q >= points_.back().first) return points_.back().second;
  auto hi = std::upper_bound(points_.begin(), points_.end(), q,
                             [](double v, const auto& pt) { return v < pt.first; });
  auto lo = hi - 1;
  const double f = (q - lo->first) / (hi->first - lo->first);
  return lo->second + f * (hi->second - lo->second);
}

RateTable RateTable::preset(const std::string& name) {
  constexpr double kT = 1.0 / 3.0;
  if (name == "S-default") {
    return RateTable({{0.0, 0.1}, {kT, 0.3}, {0.5, 0.8}, {2 * kT, 0.4}, {1.0, 0.2}});
  }
  if (name == "S-prime") {
    // Narrower competitive band: only agents close to q = 0.5 signal hard.
    return RateTable({{0.0, 0.1}, {0.42, 0.1}, {0.5, 0.8}, {0.58, 0.2}, {1.0, 0.2}});
  }
  if (name == "Z-default") {
    return RateTable({{0.0, 0.7}, {kT, 0.45}, {0.5, 0.2}, {2 * kT, 0.45}, {1.0, 0.8}});
  }
  if (name == "linear") return RateTable({{0.0, 0.0}, {1.0, 1.0}});
  if (name == "flat") return RateTable({{0.0, 0.5}});
  throw Error(ErrorCode::kInvalidConfig, "unknown rate table preset '" + name + "'");
}

std::vector<std::string> RateTable::preset_names() {
  return {"S-default", "S-prime", "Z-default", "linear", "flat"};
}

std::string policy_name(const AgentPolicy& p) {
  return std::visit(overloaded{
                        [](const RandomPainter&) { return std::string("random_painter"); },
                        [](const Mimic&) { return std::string("mimic"); },
                        [](const Signaler&) { return std::string("signaler"); },
                    },
                    p);
}

double edit_rate(const AgentPolicy& p, double q) {
  return std::visit(overloaded{
                        [](const RandomPainter& x) { return x.p; },
                        [](const Mimic& x) { return x.p; },
                        [q](const Signaler& x) { return x.table.at(q); },
                    },
                    p);
}

std::uint8_t neighbour_majority(const Frame& obs, const Position& self, const CellGeometry& g) {
  std::array<std::size_t, 256> counts{};
  const std::int64_t dims = obs.dims;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const std::int64_t r = std::int64_t{self.row} + dr;
      const std::int64_t c = std::int64_t{self.col} + dc;
      if (r < 0 || c < 0 || r >= dims || c >= dims) continue;
      const Cell* cell = obs.cell_at(Position{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)});
      if (!cell) {
        counts[0] += g.pixel_count();
        continue;
      }
      for (std::uint8_t px : cell->payload.pixels()) ++counts[px];
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < g.palette && i < counts.size(); ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  return static_cast<std::uint8_t>(best);
}

std::vector<Event> agent_policy_step(const AgentPolicy& policy, const Frame& obs, const AgentId& self,
                                     std::optional<Position> position, double q, Rng& rng,
                                     const CellGeometry& g, Tick tick, Seq seq) {
  if (!rng.bernoulli(edit_rate(policy, q))) return {};
  CellPayload payload = std::visit(overloaded{
                                       [&](const Mimic&) {
                                         const Position at = position.value_or(Position{});
                                         return CellPayload::filled(g, neighbour_majority(obs, at, g));
                                       },
                                       [&](const auto&) { return random_pixels(g, rng); },
                                   },
                                   policy);
  return {Event{self, tick, seq, std::move(payload)}};
}

json encode_policy(const AgentPolicy& p) {
  return std::visit(overloaded{
                        [](const RandomPainter& x) { return json{{"kind", "random_painter"}, {"p", x.p}}; },
                        [](const Mimic& x) { return json{{"kind", "mimic"}, {"p", x.p}}; },
                        [](const Signaler& x) {
                          if (!x.preset.empty()) return json{{"kind", "signaler"}, {"preset", x.preset}};
                          json table = json::array();
                          for (const auto& [q, r] : x.table.points()) table.push_back({q, r});
                          return json{{"kind", "signaler"}, {"table", table}};
                        },
                    },
                    p);
}

AgentPolicy decode_policy(const json& j) {
  if (j.is_string()) return policy_from_string(j.get<std::string>());
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "policy must be an object or a string");
  std::string kind;
  try {
    kind = codec::field<std::string>(j, "kind");
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("policy: ") + e.what());
  }
  auto prob = [&](double dflt) {
    const double p = j.contains("p") ? j.at("p").get<double>() : dflt;
    check_probability(p, kind + ".p");
    return p;
  };
  try {
    if (kind == "random_painter") return RandomPainter{prob(0.5)};
    if (kind == "mimic") return Mimic{prob(0.5)};
    if (kind == "signaler") {
      if (j.contains("table")) {
        std::vector<std::pair<double, double>> pts;
        for (const json& pt : j.at("table")) {
          if (!pt.is_array() || pt.size() != 2) {
            throw Error(ErrorCode::kInvalidConfig, "signaler.table entries must be [q, r]");
          }
          pts.emplace_back(pt[0].get<double>(), pt[1].get<double>());
        }
        return Signaler{RateTable(std::move(pts)), ""};
      }
      const std::string preset = j.value("preset", std::string("S-default"));
      return Signaler{RateTable::preset(preset), preset};
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, kind + ": " + e.what());
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown policy kind '" + kind + "'");
}

AgentPolicy policy_from_string(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "signaler")
    return decode_policy(json{{"kind", kind}, {"preset", arg.empty() ? "S-default" : arg}});
  json j{{"kind", kind}};
  if (!arg.empty()) {
    try {
      j["p"] = std::stod(arg);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig, "bad probability in policy '" + spec + "'");
    }
  }
  return decode_policy(j);
}

}  // namespace poietic
