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

#include "poietic/noloop.hpp"

#include <algorithm>

#include "poietic/codec.hpp"

namespace poietic {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

using codec::field;
using json = nlohmann::json;

bool contains(const std::vector<AgentId>& v, const AgentId& a) {
  return std::find(v.begin(), v.end(), a) != v.end();
}

}  // namespace

int classify_noloop(const NoloopKind& kind) {
  return std::visit(overloaded{
                        [](const OverSignal&) { return 1; },
                        [](const IdentityForgery&) { return 1; },
                        [](const NoiseInjection&) { return 1; },
                        [](const SelectiveDrop&) { return 2; },
                        [](const Retain&) { return 2; },
                        [](const MutatePayload&) { return 2; },
                        [](const Partition&) { return 2; },
                        [](const PassiveSpy&) { return 2; },
                        [](const LyingFrame&) { return 3; },
                        [](const CounterManipulation&) { return 3; },
                        [](const AdmissionMonopoly&) { return 3; },
                        [](const AsymmetricPipeline&) { return 3; },
                    },
                    kind);
}

std::string kind_name(const NoloopKind& kind) {
  static constexpr const char* kNames[] = {
      "over_signal", "identity_forgery",     "noise_injection",    "selective_drop",
      "retain",      "mutate_payload",       "partition",          "passive_spy",
      "lying_frame", "counter_manipulation", "admission_monopoly", "asymmetric_pipeline"};
  return kNames[kind.index()];
}

bool is_vanishing_point_kind(const NoloopKind& kind) {
  return std::holds_alternative<LyingFrame>(kind) || std::holds_alternative<CounterManipulation>(kind) ||
         std::holds_alternative<AdmissionMonopoly>(kind) || std::holds_alternative<AsymmetricPipeline>(kind);
}

void validate(const NoloopConfig& cfg, TopologyKind topology) {
  if (cfg.window.start > cfg.window.end) {
    throw Error(ErrorCode::kInvalidConfig, kind_name(cfg.kind) + ": window start after end");
  }
  auto prob = [&](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kInvalidConfig, kind_name(cfg.kind) + ": " + what + " must lie in [0, 1]");
    }
  };
  std::visit(overloaded{
                 [&](const OverSignal& k) {
                   if (k.multiplier < 1) {
                     throw Error(ErrorCode::kInvalidConfig, "over_signal: multiplier must be >= 1");
                   }
                 },
                 [&](const NoiseInjection& k) { prob(k.probability, "probability"); },
                 [&](const SelectiveDrop& k) { prob(k.probability, "probability"); },
                 [&](const MutatePayload& k) {
                   if (k.mask == 0) {
                     throw Error(ErrorCode::kInvalidConfig, "mutate_payload: mask must be non-zero");
                   }
                 },
                 [&](const Partition& k) {
                   if (topology != TopologyKind::kDP) {
                     throw Error(ErrorCode::kTopologyMismatch, "partition needs peer edges; TP has none");
                   }
                   if (k.groups.size() < 2) {
                     throw Error(ErrorCode::kInvalidConfig, "partition: needs at least two groups");
                   }
                 },
                 [&](const LyingFrame&) {
                   if (topology != TopologyKind::kTP) {
                     throw Error(ErrorCode::kTopologyMismatch, "lying_frame needs a TP server");
                   }
                 },
                 [&](const CounterManipulation&) {
                   if (topology != TopologyKind::kTP) {
                     throw Error(ErrorCode::kTopologyMismatch, "counter_manipulation needs a TP server");
                   }
                 },
                 [&](const AsymmetricPipeline& k) {
                   prob(k.delivery_bias, "delivery_bias");
                   if (topology != TopologyKind::kTP) {
                     throw Error(ErrorCode::kTopologyMismatch, "asymmetric_pipeline needs a TP server");
                   }
                 },
                 [](const auto&) {},
             },
             cfg.kind);
}

const char* to_string(InterceptionAction a) {
  switch (a) {
    case InterceptionAction::kDrop:
      return "drop";
    case InterceptionAction::kStrip:
      return "strip";
    case InterceptionAction::kDelay:
      return "delay";
    case InterceptionAction::kMutate:
      return "mutate";
    case InterceptionAction::kInject:
      return "inject";
    case InterceptionAction::kOverride:
      return "override";
    case InterceptionAction::kRefuse:
      return "refuse";
    case InterceptionAction::kObserve:
      return "observe";
  }
  return "observe";
}

InterceptionAction action_from_string(const std::string& s) {
  for (auto a : {InterceptionAction::kDrop, InterceptionAction::kStrip, InterceptionAction::kDelay,
                 InterceptionAction::kMutate, InterceptionAction::kInject, InterceptionAction::kOverride,
                 InterceptionAction::kRefuse, InterceptionAction::kObserve}) {
    if (s == to_string(a)) return a;
  }
  throw Error(ErrorCode::kMalformed, "unknown interception action '" + s + "'");
}

const char* to_string(Channel c) {
  switch (c) {
    case Channel::kUplink:
      return "uplink";
    case Channel::kDownlink:
      return "downlink";
    case Channel::kGossip:
      return "gossip";
  }
  return "uplink";
}

bool Envelope::carries(const AgentId& agent) const {
  for (const Event& e : events) {
    if (e.agent == agent) return true;
  }
  if (frame) {
    for (const auto& [_, cell] : frame->cells) {
      if (cell.owner == agent) return true;
    }
  }
  return false;
}

Interceptor::Interceptor(NoloopConfig cfg, CellGeometry geometry)
    : cfg_(std::move(cfg)), geometry_(geometry), rng_(cfg_.seed) {}

std::vector<InterceptionRecord> Interceptor::take_records() {
  std::vector<InterceptionRecord> out;
  out.swap(records_);
  return out;
}

void Interceptor::record(const Envelope& env, InterceptionAction action, std::optional<AgentId> subject,
                         std::string detail) {
  records_.push_back(InterceptionRecord{env.sent_tick, kind_name(cfg_.kind), classify_noloop(cfg_.kind),
                                        action, env.id, env.from, env.to, std::move(subject),
                                        std::move(detail)});
}

namespace {

// XOR every pixel with the mask, folded back into the palette; a pixel that
// would come out unchanged is bumped so the corruption is always visible.
CellPayload corrupt_pixels(const CellPayload& p, std::uint8_t mask, std::uint32_t palette) {
  CellPayload out = p;
  for (auto& px : out.pixels()) {
    auto v = static_cast<std::uint8_t>((px ^ mask) % palette);
    if (v == px) v = static_cast<std::uint8_t>((px + 1) % palette);
    px = v;
  }
  return out;
}

}  // namespace

std::vector<Envelope> Interceptor::process(Tick now, std::vector<Envelope> batch) {
  if (!cfg_.window.contains(now) || is_vanishing_point_kind(cfg_.kind)) return batch;

  std::vector<Envelope> out;
  out.reserve(batch.size());

  std::visit(overloaded{
                 [&](const OverSignal& k) {
                   for (Envelope& env : batch) {
                     const bool flood =
                         env.from == k.target && env.channel != Channel::kDownlink && !env.events.empty();
                     out.push_back(env);
                     if (!flood) continue;
                     for (std::uint32_t i = 1; i < k.multiplier; ++i) {
                       Envelope copy = env;
                       copy.id = 0;
                       record(copy, InterceptionAction::kInject, k.target, "duplicate signal");
                       out.push_back(std::move(copy));
                     }
                   }
                 },
                 [&](const IdentityForgery& k) {
                   const Envelope* carrier = nullptr;
                   std::optional<CellPayload> template_payload;
                   for (Envelope& env : batch) {
                     if (env.channel != Channel::kDownlink && !env.events.empty() && !carrier) {
                       carrier = &env;
                     }
                     for (const Event& e : env.events) {
                       if (e.agent != k.victim) continue;
                       victim_seq_ = std::max(victim_seq_.value_or(0), e.seq);
                       template_payload = e.payload;
                     }
                   }
                   out = batch;
                   if (!carrier || !victim_seq_ || !template_payload) return;
                   const Seq seq = std::max(*victim_seq_ + 1, forged_);
                   forged_ = seq + 1;
                   CellPayload forged = *template_payload;
                   for (auto& px : forged.pixels())
                     px = static_cast<std::uint8_t>(rng_.below(geometry_.palette));
                   Envelope fake;
                   fake.id = 0;
                   fake.sent_tick = now;
                   fake.deliver_tick = carrier->deliver_tick;
                   fake.from = k.victim;
                   fake.to = carrier->to;
                   fake.channel = carrier->channel;
                   fake.code = carrier->code;
                   fake.events.push_back(Event{k.victim, now, seq, std::move(forged)});
                   record(fake, InterceptionAction::kInject, k.victim, "forged seq " + std::to_string(seq));
                   out.push_back(std::move(fake));
                 },
                 [&](const NoiseInjection& k) {
                   for (Envelope& env : batch) {
                     out.push_back(env);
                     if (!rng_.bernoulli(k.probability)) continue;
                     Envelope junk;
                     junk.id = 0;
                     junk.sent_tick = env.sent_tick;
                     junk.deliver_tick = env.deliver_tick;
                     junk.from = env.from;
                     junk.to = env.to;
                     junk.channel = env.channel;
                     for (auto& b : junk.code.bytes) b = static_cast<std::uint8_t>(rng_.below(256));
                     if (junk.code == env.code) junk.code.bytes[0] ^= 0xff;
                     record(junk, InterceptionAction::kInject, std::nullopt, "noise");
                     out.push_back(std::move(junk));
                   }
                 },
                 [&](const SelectiveDrop& k) {
                   for (Envelope& env : batch) {
                     const bool to_agent = env.to != server_node();
                     const bool edge_matches =
                         k.direction == DropDirection::kToSelf ? env.to == k.target : env.to != k.target;
                     if (to_agent && edge_matches && env.carries(k.target) && rng_.bernoulli(k.probability)) {
                       std::erase_if(env.events, [&](const Event& e) { return e.agent == k.target; });
                       if (env.frame) {
                         std::erase_if(env.frame->cells,
                                       [&](const auto& kv) { return kv.second.owner == k.target; });
                       }
                       record(env, InterceptionAction::kStrip, k.target,
                              k.direction == DropDirection::kToSelf ? "to-self" : "to-others");
                     }
                     out.push_back(std::move(env));
                   }
                 },
                 [&](const Retain& k) {
                   for (Envelope& env : batch) {
                     if (env.channel != Channel::kDownlink && env.carries(k.target) && k.delay > 0) {
                       env.deliver_tick += k.delay;
                       record(env, InterceptionAction::kDelay, k.target,
                              "+" + std::to_string(k.delay) + " ticks");
                     }
                     out.push_back(std::move(env));
                   }
                 },
                 [&](const MutatePayload& k) {
                   for (Envelope& env : batch) {
                     if (env.channel != Channel::kDownlink && env.carries(k.target)) {
                       for (Event& e : env.events) {
                         if (e.agent != k.target) continue;
                         e.payload = corrupt_pixels(e.payload, k.mask, geometry_.palette);
                       }
                       record(env, InterceptionAction::kMutate, k.target, "mask");
                     }
                     out.push_back(std::move(env));
                   }
                 },
                 [&](const Partition& k) {
                   auto group_of = [&](const NodeId& n) -> std::size_t {
                     for (std::size_t i = 0; i < k.groups.size(); ++i) {
                       if (contains(k.groups[i], n)) return i;
                     }
                     return k.groups.size();
                   };
                   for (Envelope& env : batch) {
                     if (group_of(env.from) != group_of(env.to)) {
                       record(env, InterceptionAction::kDrop, std::nullopt, "partition");
                       continue;
                     }
                     out.push_back(std::move(env));
                   }
                 },
                 [&](const PassiveSpy&) {
                   for (Envelope& env : batch) {
                     record(env, InterceptionAction::kObserve, std::nullopt, "copied");
                     out.push_back(std::move(env));
                   }
                 },
                 [&](const auto&) { out = std::move(batch); },
             },
             cfg_.kind);
  return out;
}

namespace {

InterceptionResult run_stream(Interceptor& icpt, std::vector<Envelope> stream) {
  InterceptionResult result;
  std::size_t i = 0;
  while (i < stream.size()) {
    const Tick now = stream[i].sent_tick;
    std::vector<Envelope> batch;
    while (i < stream.size() && stream[i].sent_tick == now) batch.push_back(std::move(stream[i++]));
    for (Envelope& env : icpt.process(now, std::move(batch))) {
      result.messages.push_back(std::move(env));
    }
  }
  std::stable_sort(result.messages.begin(), result.messages.end(),
                   [](const Envelope& a, const Envelope& b) { return a.deliver_tick < b.deliver_tick; });
  result.records = icpt.take_records();
  return result;
}

}  // namespace

InterceptionResult apply_interception(const NoloopConfig& cfg, std::vector<Envelope> stream,
                                      const CellGeometry& geometry) {
  Interceptor icpt(cfg, geometry);
  return run_stream(icpt, std::move(stream));
}

InterceptionResult apply_interception(const NoloopConfig& cfg, std::vector<Envelope> stream, Rng& rng,
                                      const CellGeometry& geometry) {
  NoloopConfig seeded = cfg;
  seeded.seed = rng.next();
  Interceptor icpt(seeded, geometry);
  return run_stream(icpt, std::move(stream));
}

VanishingPoint::VanishingPoint(TopologyKind topology) : topology_(topology) {}

void VanishingPoint::corrupt(const NoloopConfig& lie) {
  if (!is_vanishing_point_kind(lie.kind)) {
    throw Error(ErrorCode::kInvalidConfig, kind_name(lie.kind) + " is not a vanishing-point lie");
  }
  validate(lie, topology_);
  lies_.push_back(lie);
  rngs_.emplace_back(lie.seed);
}

std::vector<InterceptionRecord> VanishingPoint::take_records() {
  std::vector<InterceptionRecord> out;
  out.swap(records_);
  return out;
}

AdmissionDecision VanishingPoint::admit(const AgentId& agent, Tick tick) {
  for (const NoloopConfig& lie : lies_) {
    const auto* k = std::get_if<AdmissionMonopoly>(&lie.kind);
    if (!k || !lie.window.contains(tick)) continue;
    const bool refuse = (k->reject_after && tick > *k->reject_after) || contains(k->reject, agent);
    if (refuse) {
      records_.push_back(InterceptionRecord{tick, kind_name(lie.kind), 3, InterceptionAction::kRefuse, 0,
                                            agent, server_node(), agent, "honest answer: accept"});
      return AdmissionDecision{false, "admission-refused"};
    }
  }
  return AdmissionDecision{true, {}};
}

std::optional<Frame> VanishingPoint::present(const Frame& honest, const AgentId& recipient, Role role,
                                             Tick tick, std::uint64_t message_id) {
  if (lies_.empty()) return honest;
  Frame shown = honest;
  for (std::size_t i = 0; i < lies_.size(); ++i) {
    const NoloopConfig& lie = lies_[i];
    if (!lie.window.contains(tick)) continue;
    auto note = [&](InterceptionAction action, std::optional<AgentId> subject, std::string detail) {
      records_.push_back(InterceptionRecord{tick, kind_name(lie.kind), 3, action, message_id, server_node(),
                                            recipient, std::move(subject), std::move(detail)});
    };
    if (const auto* k = std::get_if<LyingFrame>(&lie.kind)) {
      if (!k->audience.empty() && !contains(k->audience, recipient)) continue;
      for (const auto& [victim, payload] : k->overrides) {
        auto pos = honest.membership.find(victim);
        if (pos == honest.membership.end()) continue;
        Cell& cell = shown.cells[pos->second];
        if (cell.owner.empty()) cell.owner = victim;
        if (cell.payload == payload) continue;
        cell.payload = payload;
        note(InterceptionAction::kOverride, victim, "cell override");
      }
    } else if (const auto* k = std::get_if<CounterManipulation>(&lie.kind)) {
      Canvas fake(shown.geometry);
      fake.adopt_membership(shown.membership, shown.dims);
      for (const AgentId& hidden : k->hidden) {
        if (fake.is_member(hidden)) fake.remove_member(hidden, tick);
      }
      for (std::uint32_t p = 0; p < k->phantoms; ++p) {
        const AgentId phantom("phantom-" + std::to_string(p));
        if (!fake.is_member(phantom)) fake.add_member(phantom);
      }
      if (fake.membership() != shown.membership) {
        shown.membership = fake.membership();
        shown.dims = fake.dims();
        note(InterceptionAction::kOverride, std::nullopt, "membership misreport");
      }
    } else if (const auto* k = std::get_if<AsymmetricPipeline>(&lie.kind)) {
      if (role != k->privileged && rngs_[i].bernoulli(k->delivery_bias)) {
        note(InterceptionAction::kDrop, recipient, "unprivileged role");
        return std::nullopt;
      }
    }
  }
  return shown;
}

VanishingPoint corrupt_vanishing_point(VanishingPoint vp, const NoloopConfig& lie) {
  vp.corrupt(lie);
  return vp;
}

namespace {

const char* direction_name(DropDirection d) { return d == DropDirection::kToSelf ? "to-self" : "to-others"; }

DropDirection direction_from(const std::string& s) {
  if (s == "to-self") return DropDirection::kToSelf;
  if (s == "to-others") return DropDirection::kToOthers;
  throw Error(ErrorCode::kInvalidConfig, "direction must be to-self or to-others");
}

std::vector<AgentId> agents_from(const json& j) {
  std::vector<AgentId> out;
  if (!j.is_array()) throw Error(ErrorCode::kInvalidConfig, "expected a list of agent ids");
  for (const auto& a : j) out.emplace_back(a.get<std::string>());
  return out;
}

json agents_to(const std::vector<AgentId>& v) {
  json out = json::array();
  for (const auto& a : v) out.push_back(a.str());
  return out;
}

CellPayload payload_from(const json& j, const CellGeometry& g) {
  if (j.is_number_unsigned()) {
    const auto color = codec::unsigned_value<std::uint32_t>(j);
    if (color >= g.palette) throw Error(ErrorCode::kInvalidConfig, "fill color outside palette");
    return CellPayload::filled(g, static_cast<std::uint8_t>(color));
  }
  return codec::decode_pixels(j.get<std::string>(), g);
}

}  // namespace

json encode_noloop(const NoloopConfig& cfg, const CellGeometry& g) {
  json j{{"kind", kind_name(cfg.kind)},
         {"window", json::array({cfg.window.start, cfg.window.end})},
         {"seed", cfg.seed}};
  std::visit(overloaded{
                 [&](const OverSignal& k) {
                   j["target"] = k.target.str();
                   j["multiplier"] = k.multiplier;
                 },
                 [&](const IdentityForgery& k) { j["victim"] = k.victim.str(); },
                 [&](const NoiseInjection& k) { j["probability"] = k.probability; },
                 [&](const SelectiveDrop& k) {
                   j["target"] = k.target.str();
                   j["direction"] = direction_name(k.direction);
                   j["probability"] = k.probability;
                 },
                 [&](const Retain& k) {
                   j["target"] = k.target.str();
                   j["delay"] = k.delay;
                 },
                 [&](const MutatePayload& k) {
                   j["target"] = k.target.str();
                   j["mask"] = k.mask;
                 },
                 [&](const Partition& k) {
                   json groups = json::array();
                   for (const auto& grp : k.groups) groups.push_back(agents_to(grp));
                   j["groups"] = groups;
                 },
                 [&](const PassiveSpy&) {},
                 [&](const LyingFrame& k) {
                   json ov = json::object();
                   for (const auto& [a, p] : k.overrides) ov[a.str()] = codec::encode_pixels(p, g);
                   j["overrides"] = ov;
                   j["audience"] = agents_to(k.audience);
                 },
                 [&](const CounterManipulation& k) {
                   j["hidden"] = agents_to(k.hidden);
                   j["phantoms"] = k.phantoms;
                 },
                 [&](const AdmissionMonopoly& k) {
                   j["reject_after"] = k.reject_after ? json(*k.reject_after) : json(nullptr);
                   j["reject"] = agents_to(k.reject);
                 },
                 [&](const AsymmetricPipeline& k) {
                   j["privileged"] = to_string(k.privileged);
                   j["delivery_bias"] = k.delivery_bias;
                 },
             },
             cfg.kind);
  return j;
}

NoloopConfig decode_noloop(const json& j, const CellGeometry& g) {
  NoloopConfig cfg;
  const auto kind = field<std::string>(j, "kind");
  if (j.contains("window")) {
    const json& w = j.at("window");
    if (!w.is_array() || w.size() != 2) {
      throw Error(ErrorCode::kInvalidConfig, kind + ": window must be [start, end]");
    }
    cfg.window = ActiveWindow{codec::unsigned_value<Tick>(w[0]), codec::unsigned_value<Tick>(w[1])};
  }
  cfg.seed = j.value("seed", std::uint64_t{0});
  try {
    if (kind == "over_signal") {
      cfg.kind =
          OverSignal{AgentId(field<std::string>(j, "target")), j.value("multiplier", std::uint32_t{2})};
    } else if (kind == "identity_forgery") {
      cfg.kind = IdentityForgery{AgentId(field<std::string>(j, "victim"))};
    } else if (kind == "noise_injection") {
      cfg.kind = NoiseInjection{j.value("probability", 0.1)};
    } else if (kind == "selective_drop") {
      cfg.kind = SelectiveDrop{AgentId(field<std::string>(j, "target")),
                               direction_from(j.value("direction", std::string("to-others"))),
                               j.value("probability", 1.0)};
    } else if (kind == "retain") {
      cfg.kind = Retain{AgentId(field<std::string>(j, "target")), field<Tick>(j, "delay")};
    } else if (kind == "mutate_payload") {
      cfg.kind = MutatePayload{AgentId(field<std::string>(j, "target")), j.value("mask", std::uint8_t{0x5})};
    } else if (kind == "partition") {
      Partition p;
      for (const auto& grp : j.at("groups")) p.groups.push_back(agents_from(grp));
      cfg.kind = std::move(p);
    } else if (kind == "passive_spy") {
      cfg.kind = PassiveSpy{};
    } else if (kind == "lying_frame") {
      LyingFrame lf;
      for (auto it = j.at("overrides").begin(); it != j.at("overrides").end(); ++it) {
        lf.overrides.emplace(AgentId(it.key()), payload_from(it.value(), g));
      }
      if (j.contains("audience")) lf.audience = agents_from(j.at("audience"));
      cfg.kind = std::move(lf);
    } else if (kind == "counter_manipulation") {
      CounterManipulation cm;
      if (j.contains("hidden")) cm.hidden = agents_from(j.at("hidden"));
      cm.phantoms = j.value("phantoms", std::uint32_t{0});
      cfg.kind = std::move(cm);
    } else if (kind == "admission_monopoly") {
      AdmissionMonopoly am;
      if (j.contains("reject_after") && !j.at("reject_after").is_null()) {
        am.reject_after = codec::unsigned_value<Tick>(j.at("reject_after"));
      }
      if (j.contains("reject")) am.reject = agents_from(j.at("reject"));
      cfg.kind = std::move(am);
    } else if (kind == "asymmetric_pipeline") {
      cfg.kind = AsymmetricPipeline{role_from_string(j.value("privileged", std::string("operator"))),
                                    j.value("delivery_bias", 0.3)};
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown noloop kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, kind + ": " + e.what());
  }
  return cfg;
}

json encode_record(const InterceptionRecord& r) {
  return json{{"tick", r.tick},          {"noloop", r.noloop},
              {"level", r.level},        {"action", to_string(r.action)},
              {"message", r.message_id}, {"from", r.from.str()},
              {"to", r.to.str()},        {"subject", r.subject ? json(r.subject->str()) : json(nullptr)},
              {"detail", r.detail}};
}

InterceptionRecord decode_record(const json& j) {
  InterceptionRecord r;
  r.tick = field<Tick>(j, "tick");
  r.noloop = field<std::string>(j, "noloop");
  r.level = field<int>(j, "level");
  r.action = action_from_string(field<std::string>(j, "action"));
  r.message_id = field<std::uint64_t>(j, "message");
  r.from = AgentId(field<std::string>(j, "from"));
  r.to = AgentId(field<std::string>(j, "to"));
  if (j.contains("subject") && !j.at("subject").is_null()) {
    r.subject = AgentId(j.at("subject").get<std::string>());
  }
  r.detail = j.value("detail", std::string());
  return r;
}

}  // namespace poietic
