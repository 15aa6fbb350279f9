// Copyright 2026 The Authors.
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

// Instance files:
//
//   {"hypotheses": [{"id": "h1", "weight": 0.5}, ...],
//    "tests":      [{"id": "t1", "cost": 1}, ...],
//    "outcomes":   [[1, 2, ...], ...],      hypotheses x tests, labels >= 1
//    "classes":    [["h1", "h2"], ...]}
//
// Labels are shifted to 0-based on load and back on save. The loader stops at
// the first problem and names its location.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "ecd/core.hpp"
#include "ecd/oracle.hpp"
#include "ecd/policies.hpp"
#include "json.hpp"

namespace ecd {

namespace detail {

[[noreturn]] inline void bad(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

inline const nlohmann::json& field(const nlohmann::json& j, const char* name,
                                   const std::string& where) {
  if (!j.is_object() || !j.contains(name)) bad(where, std::string("missing field '") + name + "'");
  return j.at(name);
}

inline double number(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

inline std::string text(const nlohmann::json& j, const std::string& where) {
  if (!j.is_string()) bad(where, "expected a string");
  return j.get<std::string>();
}

}  // namespace detail

inline EcdInstance instance_from_json(const nlohmann::json& doc) {
  using detail::bad;
  const auto& hyps = detail::field(doc, "hypotheses", "instance");
  const auto& tests = detail::field(doc, "tests", "instance");
  const auto& rows = detail::field(doc, "outcomes", "instance");
  const auto& classes = detail::field(doc, "classes", "instance");
  if (!hyps.is_array() || hyps.empty()) bad("hypotheses", "expected a non-empty array");
  if (!tests.is_array()) bad("tests", "expected an array");
  if (!rows.is_array()) bad("outcomes", "expected an array");
  if (!classes.is_array()) bad("classes", "expected an array");

  std::vector<std::string> hyp_ids;
  std::vector<double> weights;
  std::map<std::string, std::size_t> hyp_index;
  for (std::size_t h = 0; h < hyps.size(); ++h) {
    const std::string where = "hypotheses[" + std::to_string(h) + "]";
    const std::string id = detail::text(detail::field(hyps[h], "id", where), where + ".id");
    const double w = detail::number(detail::field(hyps[h], "weight", where), where + ".weight");
    if (!(w >= 0.0) || !std::isfinite(w)) bad(where + ".weight", "must be finite and >= 0");
    if (!hyp_index.emplace(id, h).second) bad(where + ".id", "duplicate id '" + id + "'");
    hyp_ids.push_back(id);
    weights.push_back(w);
  }
  double total = 0.0;
  for (double w : weights) total += w;
  if (std::abs(total - 1.0) > kPriorTolerance)
    bad("hypotheses", "weights sum to " + std::to_string(total) + ", not 1");

  std::vector<std::string> test_ids;
  std::vector<double> costs;
  std::set<std::string> seen_tests;
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const std::string where = "tests[" + std::to_string(t) + "]";
    const std::string id = detail::text(detail::field(tests[t], "id", where), where + ".id");
    const double c = detail::number(detail::field(tests[t], "cost", where), where + ".cost");
    if (!(c > 0.0) || !std::isfinite(c)) bad(where + ".cost", "must be finite and > 0");
    if (!seen_tests.insert(id).second) bad(where + ".id", "duplicate id '" + id + "'");
    test_ids.push_back(id);
    costs.push_back(c);
  }

  if (rows.size() != hyp_ids.size())
    bad("outcomes", "has " + std::to_string(rows.size()) + " rows for " +
                        std::to_string(hyp_ids.size()) + " hypotheses");
  std::vector<std::vector<Outcome>> outcomes(rows.size());
  for (std::size_t h = 0; h < rows.size(); ++h) {
    const std::string where = "outcomes[" + std::to_string(h) + "]";
    if (!rows[h].is_array() || rows[h].size() != test_ids.size())
      bad(where, "expected " + std::to_string(test_ids.size()) + " entries");
    for (std::size_t t = 0; t < test_ids.size(); ++t) {
      const auto& v = rows[h][t];
      const std::string cell = where + "[" + std::to_string(t) + "]";
      if (!v.is_number_integer()) bad(cell, "expected an integer label");
      const auto label = v.get<long long>();
      if (label < 1) bad(cell, "label " + std::to_string(label) + " is below 1");
      if (label > 1000000) bad(cell, "label " + std::to_string(label) + " is implausibly large");
      outcomes[h].push_back(static_cast<Outcome>(label - 1));
    }
  }
  for (std::size_t a = 0; a < outcomes.size(); ++a)
    for (std::size_t b = a + 1; b < outcomes.size(); ++b)
      if (outcomes[a] == outcomes[b])
        bad("outcomes", "rows " + std::to_string(a) + " and " + std::to_string(b) +
                            " are identical (" + hyp_ids[a] + ", " + hyp_ids[b] + ")");

  std::vector<std::vector<std::size_t>> parts(classes.size());
  std::vector<int> owner(hyp_ids.size(), -1);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::string where = "classes[" + std::to_string(i) + "]";
    if (!classes[i].is_array() || classes[i].empty()) bad(where, "expected a non-empty array");
    for (std::size_t k = 0; k < classes[i].size(); ++k) {
      const std::string cell = where + "[" + std::to_string(k) + "]";
      const std::string id = detail::text(classes[i][k], cell);
      auto it = hyp_index.find(id);
      if (it == hyp_index.end()) bad(cell, "unknown hypothesis '" + id + "'");
      if (owner[it->second] >= 0)
        bad(cell, "hypothesis '" + id + "' already in classes[" +
                      std::to_string(owner[it->second]) + "]");
      owner[it->second] = static_cast<int>(i);
      parts[i].push_back(it->second);
    }
  }
  for (std::size_t h = 0; h < owner.size(); ++h)
    if (owner[h] < 0) bad("classes", "hypothesis '" + hyp_ids[h] + "' is in no class");

  return {std::move(hyp_ids), Prior{std::move(weights), false}, std::move(test_ids),
          std::move(costs), std::move(outcomes), std::move(parts)};
}

inline nlohmann::json to_json(const EcdInstance& inst) {
  nlohmann::json hyps = nlohmann::json::array(), tests = nlohmann::json::array(),
                 rows = nlohmann::json::array(), classes = nlohmann::json::array();
  for (std::size_t h = 0; h < inst.num_hypotheses(); ++h)
    hyps.push_back({{"id", inst.hypothesis_id(h)}, {"weight", inst.prior(h)}});
  for (std::size_t t = 0; t < inst.num_tests(); ++t)
    tests.push_back({{"id", inst.test_id(t)}, {"cost", inst.cost(t)}});
  for (std::size_t h = 0; h < inst.num_hypotheses(); ++h) {
    nlohmann::json row = nlohmann::json::array();
    for (Outcome y : inst.row(h)) row.push_back(y + 1);
    rows.push_back(row);
  }
  for (const auto& members : inst.classes()) {
    nlohmann::json c = nlohmann::json::array();
    for (std::size_t h : members) c.push_back(inst.hypothesis_id(h));
    classes.push_back(c);
  }
  return {{"hypotheses", hyps}, {"tests", tests}, {"outcomes", rows}, {"classes", classes}};
}

inline nlohmann::json to_json(const EcdInstance& inst, const std::vector<Observation>& xs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& o : xs) out.push_back({{"test", inst.test_id(o.test)}, {"outcome", o.outcome + 1}});
  return out;
}

inline nlohmann::json to_json(const EcdInstance& inst, const PropertyReport& r) {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : r.violations) {
    nlohmann::json j = {{"smaller", to_json(inst, x.smaller)},
                        {"test", inst.test_id(x.test)},
                        {"lhs", x.lhs},
                        {"rhs", x.rhs}};
    if (r.property == "adaptive_submodularity") j["larger"] = to_json(inst, x.larger);
    else j["outcome"] = x.outcome + 1;
    v.push_back(j);
  }
  return {{"property", r.property},
          {"pass", r.pass},
          {"checked", r.checked},
          {"violation_count", r.violation_count},
          {"violations", v}};
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline EcdInstance load_instance(const std::filesystem::path& path) {
  return instance_from_json(read_json_file(path));
}

inline void save_instance(const EcdInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(inst).dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace ecd
