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

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "doctest.h"
#include "poietic/session_service.hpp"

using namespace poietic;

namespace {

const std::filesystem::path kSource = POIETIC_SOURCE_DIR;

std::vector<std::string> json_examples(const std::string& doc) {
  std::vector<std::string> out;
  std::istringstream in(doc);
  std::string line;
  bool inside = false;
  while (std::getline(in, line)) {
    if (line.rfind("```", 0) == 0) {
      inside = !inside && line == "```json";
      continue;
    }
    if (inside && !line.empty()) out.push_back(line);
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("protocol doc examples are exactly what the encoder produces") {
  const std::string doc = slurp(kSource / "docs" / "protocol.md");
  const auto examples = json_examples(doc);
  REQUIRE(examples.size() >= 9);

  const ServiceConfig cfg = load_service_config(kSource / "scenarios" / "service.json");
  const VanishingCode code = vanishing_code(cfg.scenario.genesis());
  std::set<wire::Kind> kinds;
  for (const std::string& line : examples) {
    CAPTURE(line);
    const wire::Message m = wire::decode(line, cfg.scenario.geometry);
    CHECK(wire::encode(m, cfg.scenario.geometry) == line + "\n");
    CHECK(m.code == code);
    kinds.insert(m.kind());
  }
  CHECK(kinds.size() == 9);
}

TEST_CASE("protocol doc lists every error reason") {
  const std::string doc = slurp(kSource / "docs" / "protocol.md");
  std::set<std::string> listed;
  const std::regex row(R"(\| `([a-z-]+)` +\| )");
  for (auto it = std::sregex_iterator(doc.begin(), doc.end(), row); it != std::sregex_iterator(); ++it) {
    listed.insert((*it)[1]);
  }
  for (const char* r :
       {wire::reason::kCodeMismatch, wire::reason::kAdmissionRefused, wire::reason::kUnknownAgent,
        wire::reason::kNonMember, wire::reason::kDuplicateAgent, wire::reason::kMalformed,
        wire::reason::kUnknownKind, wire::reason::kUnexpectedKind}) {
    CHECK(listed.contains(r));
  }
}
