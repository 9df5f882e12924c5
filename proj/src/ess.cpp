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

#include "poietic/ess.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace poietic {

const char* to_string(ShapeLabel s) {
  switch (s) {
    case ShapeLabel::kS:
      return "S";
    case ShapeLabel::kZ:
      return "Z";
    case ShapeLabel::kIndeterminate:
      return "indeterminate";
  }
  return "?";
}

std::vector<EssPoint> ess_points(const SessionLog& log, const std::map<AgentId, double>& quality,
                                 Tick last_active) {
  struct Tally {
    std::optional<Tick> since;
    Tick member_ticks = 0;
    std::size_t events = 0;
    bool admitted = false;
  };
  std::map<AgentId, Tally> tallies;
  auto close = [&](Tally& t, Tick leave) {
    if (!t.since) return;
    const Tick from = std::max<Tick>(*t.since, 1);
    const Tick to = std::min<Tick>(leave == 0 ? 0 : leave - 1, last_active);
    if (to >= from) t.member_ticks += to - from + 1;
    t.since.reset();
  };
  for (const Record& r : log.records) {
    if (const auto* x = std::get_if<rec::JoinOutcome>(&r)) {
      if (!x->accepted) continue;
      Tally& t = tallies[x->agent];
      t.admitted = true;
      if (!t.since) t.since = x->tick;
    } else if (const auto* x = std::get_if<rec::LeaveOutcome>(&r)) {
      if (x->honored) close(tallies[x->agent], x->tick);
    } else if (const auto* x = std::get_if<rec::EventSent>(&r)) {
      ++tallies[x->event.agent].events;
    }
  }
  std::vector<EssPoint> out;
  for (auto& [id, t] : tallies) {
    if (!t.admitted) continue;
    close(t, last_active + 1);
    auto q = quality.find(id);
    const double y =
        t.member_ticks == 0 ? 0.0 : static_cast<double>(t.events) / static_cast<double>(t.member_ticks);
    out.push_back(EssPoint{id, q == quality.end() ? 0.0 : q->second, y});
  }
  return out;
}

TertileMeans tertile_means(std::span<const EssPoint> points) {
  TertileMeans m;
  if (points.empty()) return m;
  auto [lo_it, hi_it] = std::minmax_element(points.begin(), points.end(),
                                            [](const EssPoint& a, const EssPoint& b) { return a.q < b.q; });
  const double lo = lo_it->q;
  const double span = hi_it->q - lo;
  double s1 = 0, s2 = 0, s3 = 0;
  for (const EssPoint& p : points) {
    const double f = span > 0 ? (p.q - lo) / span : 0.0;
    if (f < 1.0 / 3.0) {
      s1 += p.y;
      ++m.n1;
    } else if (f < 2.0 / 3.0) {
      s2 += p.y;
      ++m.n2;
    } else {
      s3 += p.y;
      ++m.n3;
    }
  }
  if (m.n1) m.m1 = s1 / static_cast<double>(m.n1);
  if (m.n2) m.m2 = s2 / static_cast<double>(m.n2);
  if (m.n3) m.m3 = s3 / static_cast<double>(m.n3);
  return m;
}

ShapeLabel classify_ess_shape(std::span<const EssPoint> points) {
  if (points.size() < kMinEssPoints) {
    throw Error(ErrorCode::kInsufficientData, "shape classification needs at least " +
                                                  std::to_string(kMinEssPoints) + " points, got " +
                                                  std::to_string(points.size()));
  }
  const TertileMeans m = tertile_means(points);
  if (m.n1 == 0 || m.n2 == 0 || m.n3 == 0) return ShapeLabel::kIndeterminate;
  if (m.m2 > m.m1 && m.m2 > m.m3) return ShapeLabel::kS;
  if (m.m2 < m.m1 && m.m2 < m.m3) return ShapeLabel::kZ;
  return ShapeLabel::kIndeterminate;
}

std::string ess_to_csv(std::span<const EssPoint> points) {
  std::ostringstream os;
  os << "agent,q,y\n" << std::setprecision(17);
  for (const EssPoint& p : points) os << p.agent.str() << ',' << p.q << ',' << p.y << '\n';
  return os.str();
}

std::vector<EssPoint> ess_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<EssPoint> out;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("agent", 0) == 0) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    try {
      if (cols.size() == 3) {
        out.push_back(EssPoint{AgentId(cols[0]), std::stod(cols[1]), std::stod(cols[2])});
      } else if (cols.size() == 2) {
        out.push_back(
            EssPoint{AgentId("p" + std::to_string(out.size() + 1)), std::stod(cols[0]), std::stod(cols[1])});
      } else {
        throw std::invalid_argument("expected 2 or 3 columns");
      }
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kMalformed, "ess points line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<EssPoint> read_ess_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMalformed, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ess_from_csv(ss.str());
}

}  // namespace poietic
