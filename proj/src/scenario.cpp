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

#include "poietic/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

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

// Collects problems instead of stopping at the first one.
class Problems {
 public:
  template <class F>
  void guard(const std::string& where, F&& f) {
    try {
      f();
    } catch (const json::exception& e) {
      add(where + ": " + e.what());
    } catch (const std::exception& e) {
      add(where + ": " + e.what());
    }
  }
  void add(std::string msg) { list_.push_back(std::move(msg)); }
  std::vector<std::string>& list() { return list_; }

 private:
  std::vector<std::string> list_;
};

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed,
                Problems& problems) {
  if (!j.is_object()) {
    problems.add(where + ": expected an object");
    return;
  }
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.contains(k)) problems.add(where + ": unknown key '" + k + "'");
  }
}

std::vector<AgentId> referenced_agents(const NoloopKind& kind) {
  return std::visit(overloaded{
                        [](const OverSignal& k) { return std::vector<AgentId>{k.target}; },
                        [](const IdentityForgery& k) { return std::vector<AgentId>{k.victim}; },
                        [](const SelectiveDrop& k) { return std::vector<AgentId>{k.target}; },
                        [](const Retain& k) { return std::vector<AgentId>{k.target}; },
                        [](const MutatePayload& k) { return std::vector<AgentId>{k.target}; },
                        [](const Partition& k) {
                          std::vector<AgentId> all;
                          for (const auto& g : k.groups) all.insert(all.end(), g.begin(), g.end());
                          return all;
                        },
                        [](const LyingFrame& k) {
                          std::vector<AgentId> all = k.audience;
                          for (const auto& [a, p] : k.overrides) all.push_back(a);
                          return all;
                        },
                        [](const CounterManipulation& k) { return k.hidden; },
                        [](const auto&) { return std::vector<AgentId>{}; },
                    },
                    kind);
}

json encode_quality(const QualitySpec& q) {
  return std::visit(overloaded{
                        [](double v) { return json(v); },
                        [](const QualitySpread& s) { return json{{"spread", {s.lo, s.hi}}}; },
                        [](const QualityUniform& s) { return json{{"uniform", {s.lo, s.hi}}}; },
                    },
                    q);
}

QualitySpec decode_quality(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_object() && j.size() == 1) {
    const std::string key = j.begin().key();
    const json& range = j.begin().value();
    if (!range.is_array() || range.size() != 2) {
      throw Error(ErrorCode::kInvalidConfig, "quality range must be [lo, hi]");
    }
    const double lo = range[0].get<double>(), hi = range[1].get<double>();
    if (key == "spread") return QualitySpread{lo, hi};
    if (key == "uniform") return QualityUniform{lo, hi};
  }
  throw Error(ErrorCode::kInvalidConfig,
              "quality must be a number, {\"spread\": [lo, hi]} or {\"uniform\": [lo, hi]}");
}

}  // namespace

const char* to_string(PeerGraph g) { return g == PeerGraph::kRing ? "ring" : "complete"; }

std::vector<AgentSpec> ScenarioConfig::roster() const {
  std::vector<AgentSpec> out;
  Rng rng(derive_seed(seed, "quality"));
  for (const AgentGroup& g : agents) {
    for (std::uint32_t i = 0; i < g.count; ++i) {
      AgentSpec a;
      a.id = AgentId("a" + std::to_string(out.size() + 1));
      a.policy = g.policy;
      a.role = g.role;
      a.join_tick = g.join_tick;
      a.leave_tick = g.leave_tick;
      a.q = std::visit(overloaded{
                           [](double v) { return v; },
                           [&](const QualitySpread& s) {
                             if (g.count == 1) return (s.lo + s.hi) / 2.0;
                             return s.lo +
                                    (s.hi - s.lo) * static_cast<double>(i) / static_cast<double>(g.count - 1);
                           },
                           [&](const QualityUniform& s) { return s.lo + (s.hi - s.lo) * rng.uniform(); },
                       },
                       g.quality);
      out.push_back(std::move(a));
    }
  }
  return out;
}

std::vector<std::string> validate_scenario(const ScenarioConfig& cfg) {
  Problems p;
  if (cfg.schema_version != kScenarioSchemaVersion) {
    p.add("schema_version: unsupported version " + std::to_string(cfg.schema_version));
  }
  if (cfg.session.empty()) p.add("session: must not be empty");
  p.guard("geometry", [&] { codec::decode_geometry(codec::encode_geometry(cfg.geometry)); });
  if (cfg.topology.kind == TopologyKind::kDP && cfg.topology.fanout < 1)
    p.add("topology.fanout: must be >= 1");
  if (cfg.agents.empty()) p.add("agents: at least one group is required");
  for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
    const AgentGroup& g = cfg.agents[i];
    const std::string where = "agents[" + std::to_string(i) + "]";
    if (g.count < 1) p.add(where + ".count: must be >= 1");
    auto in_unit = [&](double v) { return v >= 0.0 && v <= 1.0; };
    std::visit(overloaded{
                   [&](double v) {
                     if (!in_unit(v)) p.add(where + ".quality: must lie in [0, 1]");
                   },
                   [&](const auto& r) {
                     if (!in_unit(r.lo) || !in_unit(r.hi) || r.lo > r.hi) {
                       p.add(where + ".quality: range must satisfy 0 <= lo <= hi <= 1");
                     }
                   },
               },
               g.quality);
    std::visit(overloaded{
                   [&](const Signaler&) {},
                   [&](const auto& x) {
                     if (!in_unit(x.p)) p.add(where + ".policy: edit probability must lie in [0, 1]");
                   },
               },
               g.policy);
    if (g.join_tick > cfg.duration) p.add(where + ".join_tick: after the end of the run");
    if (g.leave_tick && *g.leave_tick <= g.join_tick) p.add(where + ".leave_tick: must come after join_tick");
  }
  std::set<AgentId> known;
  for (const AgentSpec& a : cfg.roster()) known.insert(a.id);
  for (std::size_t i = 0; i < cfg.noloops.size(); ++i) {
    const std::string where = "noloops[" + std::to_string(i) + "]";
    p.guard(where, [&] { validate(cfg.noloops[i], cfg.topology.kind); });
    for (const AgentId& a : referenced_agents(cfg.noloops[i].kind)) {
      if (!known.contains(a)) p.add(where + ": unknown agent '" + a.str() + "'");
    }
  }
  p.guard("audit", [&] { cfg.audit.validate(); });
  return std::move(p.list());
}

void require_valid(const ScenarioConfig& cfg) {
  const auto problems = validate_scenario(cfg);
  if (problems.empty()) return;
  std::string msg = "invalid scenario (" + std::to_string(problems.size()) + " problem" +
                    (problems.size() == 1 ? "" : "s") + "):";
  for (const auto& s : problems) msg += "\n  " + s;
  throw Error(ErrorCode::kInvalidConfig, msg);
}

ScenarioConfig parse_scenario(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "invalid scenario: top level must be an object");
  ScenarioConfig cfg;
  Problems p;
  check_keys(j, "scenario",
             {"schema_version", "session", "geometry", "topology", "duration", "drain", "seed", "agents",
              "noloops", "audit"},
             p);
  if (!j.contains("schema_version")) p.add("schema_version: required");
  p.guard("schema_version", [&] { cfg.schema_version = j.at("schema_version").get<int>(); });
  if (j.contains("session")) p.guard("session", [&] { cfg.session = j.at("session").get<std::string>(); });
  if (j.contains("geometry"))
    p.guard("geometry", [&] { cfg.geometry = codec::decode_geometry(j.at("geometry")); });
  if (j.contains("topology")) {
    const json& t = j.at("topology");
    check_keys(t, "topology", {"kind", "fanout", "peer_graph"}, p);
    if (t.is_object()) {
      p.guard("topology.kind",
              [&] { cfg.topology.kind = topology_from_string(t.at("kind").get<std::string>()); });
      if (t.contains("fanout"))
        p.guard("topology.fanout",
                [&] { cfg.topology.fanout = codec::unsigned_value<std::uint32_t>(t.at("fanout")); });
      if (t.contains("peer_graph")) {
        p.guard("topology.peer_graph", [&] {
          const auto g = t.at("peer_graph").get<std::string>();
          if (g == "complete") {
            cfg.peer_graph = PeerGraph::kComplete;
          } else if (g == "ring") {
            cfg.peer_graph = PeerGraph::kRing;
          } else {
            throw Error(ErrorCode::kInvalidConfig, "must be 'complete' or 'ring'");
          }
        });
      }
    }
  }
  if (j.contains("duration"))
    p.guard("duration", [&] { cfg.duration = codec::unsigned_value<Tick>(j.at("duration")); });
  if (j.contains("drain")) p.guard("drain", [&] { cfg.drain = codec::unsigned_value<Tick>(j.at("drain")); });
  if (j.contains("seed"))
    p.guard("seed", [&] { cfg.seed = codec::unsigned_value<std::uint64_t>(j.at("seed")); });
  if (!j.contains("agents")) p.add("agents: required");
  if (j.contains("agents")) {
    const json& groups = j.at("agents");
    if (!groups.is_array()) p.add("agents: expected a list");
    for (std::size_t i = 0; groups.is_array() && i < groups.size(); ++i) {
      const json& g = groups[i];
      const std::string where = "agents[" + std::to_string(i) + "]";
      check_keys(g, where, {"count", "policy", "quality", "role", "join_tick", "leave_tick"}, p);
      if (!g.is_object()) continue;
      AgentGroup grp;
      if (g.contains("count"))
        p.guard(where + ".count", [&] { grp.count = codec::unsigned_value<std::uint32_t>(g.at("count")); });
      if (g.contains("policy"))
        p.guard(where + ".policy", [&] { grp.policy = decode_policy(g.at("policy")); });
      if (g.contains("quality"))
        p.guard(where + ".quality", [&] { grp.quality = decode_quality(g.at("quality")); });
      if (g.contains("role"))
        p.guard(where + ".role", [&] { grp.role = role_from_string(g.at("role").get<std::string>()); });
      if (g.contains("join_tick"))
        p.guard(where + ".join_tick",
                [&] { grp.join_tick = codec::unsigned_value<Tick>(g.at("join_tick")); });
      if (g.contains("leave_tick") && !g.at("leave_tick").is_null()) {
        p.guard(where + ".leave_tick",
                [&] { grp.leave_tick = codec::unsigned_value<Tick>(g.at("leave_tick")); });
      }
      cfg.agents.push_back(std::move(grp));
    }
  }
  if (j.contains("noloops")) {
    const json& list = j.at("noloops");
    if (!list.is_array()) p.add("noloops: expected a list");
    for (std::size_t i = 0; list.is_array() && i < list.size(); ++i) {
      p.guard("noloops[" + std::to_string(i) + "]",
              [&] { cfg.noloops.push_back(decode_noloop(list[i], cfg.geometry)); });
    }
  }
  if (j.contains("audit")) {
    const json& a = j.at("audit");
    check_keys(a, "audit", {"window", "epsilon", "theta", "admission_window"}, p);
    if (a.is_object()) {
      if (a.contains("window"))
        p.guard("audit.window", [&] { cfg.audit.window = codec::unsigned_value<Tick>(a.at("window")); });
      if (a.contains("epsilon"))
        p.guard("audit.epsilon", [&] { cfg.audit.epsilon = a.at("epsilon").get<double>(); });
      if (a.contains("theta")) p.guard("audit.theta", [&] { cfg.audit.theta = a.at("theta").get<double>(); });
      if (a.contains("admission_window")) {
        p.guard("audit.admission_window",
                [&] { cfg.audit.admission_window = codec::unsigned_value<Tick>(a.at("admission_window")); });
      }
    }
  }
  for (auto& s : validate_scenario(cfg)) {
    if (std::find(p.list().begin(), p.list().end(), s) == p.list().end()) p.add(std::move(s));
  }
  if (!p.list().empty()) {
    std::string msg = "invalid scenario (" + std::to_string(p.list().size()) + " problem" +
                      (p.list().size() == 1 ? "" : "s") + "):";
    for (const auto& s : p.list()) msg += "\n  " + s;
    throw Error(ErrorCode::kInvalidConfig, msg);
  }
  return cfg;
}

ScenarioConfig parse_scenario_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("invalid scenario: not valid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot open scenario " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

json encode_scenario(const ScenarioConfig& cfg) {
  json groups = json::array();
  for (const AgentGroup& g : cfg.agents) {
    groups.push_back(json{{"count", g.count},
                          {"policy", encode_policy(g.policy)},
                          {"quality", encode_quality(g.quality)},
                          {"role", to_string(g.role)},
                          {"join_tick", g.join_tick},
                          {"leave_tick", g.leave_tick ? json(*g.leave_tick) : json(nullptr)}});
  }
  json noloops = json::array();
  for (const NoloopConfig& n : cfg.noloops) noloops.push_back(encode_noloop(n, cfg.geometry));
  return json{{"schema_version", cfg.schema_version},
              {"session", cfg.session},
              {"geometry", codec::encode_geometry(cfg.geometry)},
              {"topology", json{{"kind", to_string(cfg.topology.kind)},
                                {"fanout", cfg.topology.fanout},
                                {"peer_graph", to_string(cfg.peer_graph)}}},
              {"duration", cfg.duration},
              {"drain", cfg.drain},
              {"seed", cfg.seed},
              {"agents", groups},
              {"noloops", noloops},
              {"audit", json{{"window", cfg.audit.window},
                             {"epsilon", cfg.audit.epsilon},
                             {"theta", cfg.audit.theta},
                             {"admission_window", cfg.audit.admission_window}}}};
}

}  // namespace poietic
