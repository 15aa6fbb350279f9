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

// Problem representation for equivalence class determination: hypotheses
// with a prior, tests with costs, a deterministic outcome table and a
// partition of the hypotheses into classes. Instances are immutable once
// constructed and may be shared freely between threads.

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ecd {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Outcome labels are 0-based in memory.
using Outcome = int;

enum class Mode { odt, ecd };

inline constexpr double kPriorTolerance = 1e-9;

struct Prior {
  std::vector<double> weights;
  bool kosaraju_modified = false;
};

inline Prior normalize_prior(std::span<const double> weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw ValidationError("negative or non-finite prior weight at index " +
                            std::to_string(i));
    total += weights[i];
  }
  if (!(total > 0.0)) throw ValidationError("degenerate prior");
  Prior out;
  out.weights.reserve(weights.size());
  for (double w : weights) out.weights.push_back(w / total);
  return out;
}

// Lifts every weight to at least 1/n^2 and renormalizes (unit-cost setting).
inline Prior kosaraju_prior(const Prior& prior, std::size_t n) {
  if (n == 0) throw ValidationError("kosaraju_prior needs n >= 1");
  const double floor = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  std::vector<double> lifted;
  lifted.reserve(prior.weights.size());
  for (double w : prior.weights) lifted.push_back(std::max(w, floor));
  Prior out = normalize_prior(lifted);
  out.kosaraju_modified = true;
  return out;
}

class EcdInstance {
 public:
  EcdInstance(std::vector<std::string> hypothesis_ids, Prior prior,
              std::vector<std::string> test_ids, std::vector<double> costs,
              std::vector<std::vector<Outcome>> outcomes,
              std::vector<std::vector<std::size_t>> classes)
      : hypothesis_ids_(std::move(hypothesis_ids)),
        prior_(std::move(prior)),
        test_ids_(std::move(test_ids)),
        costs_(std::move(costs)),
        outcomes_(std::move(outcomes)),
        classes_(std::move(classes)) {
    validate();
  }

  std::size_t num_hypotheses() const { return hypothesis_ids_.size(); }
  std::size_t num_tests() const { return test_ids_.size(); }
  std::size_t num_classes() const { return classes_.size(); }
  // One more than the largest outcome label in the table.
  int num_outcomes() const { return num_outcomes_; }

  double prior(std::size_t h) const { return prior_.weights[h]; }
  const Prior& prior_dist() const { return prior_; }
  double cost(std::size_t t) const { return costs_[t]; }
  const std::vector<double>& costs() const { return costs_; }
  Outcome outcome(std::size_t h, std::size_t t) const { return outcomes_[h][t]; }
  const std::vector<Outcome>& row(std::size_t h) const { return outcomes_[h]; }
  std::size_t class_of(std::size_t h) const { return class_of_[h]; }
  const std::vector<std::size_t>& class_members(std::size_t i) const {
    return classes_[i];
  }
  const std::vector<std::vector<std::size_t>>& classes() const { return classes_; }

  const std::string& hypothesis_id(std::size_t h) const { return hypothesis_ids_[h]; }
  const std::string& test_id(std::size_t t) const { return test_ids_[t]; }
  const std::vector<std::string>& hypothesis_ids() const { return hypothesis_ids_; }
  const std::vector<std::string>& test_ids() const { return test_ids_; }

  std::optional<std::size_t> find_hypothesis(std::string_view id) const {
    return find(hypothesis_ids_, id);
  }
  std::optional<std::size_t> find_test(std::string_view id) const {
    return find(test_ids_, id);
  }

  double min_prior() const {
    double m = 1.0;
    for (double p : prior_.weights)
      if (p > 0.0) m = std::min(m, p);
    return m;
  }

  // The same instance viewed as an optimal-decision-tree problem: every
  // hypothesis is its own class.
  EcdInstance with_singleton_classes() const {
    std::vector<std::vector<std::size_t>> singletons(num_hypotheses());
    for (std::size_t h = 0; h < num_hypotheses(); ++h) singletons[h] = {h};
    return {hypothesis_ids_, prior_, test_ids_, costs_, outcomes_, std::move(singletons)};
  }

  EcdInstance with_prior(Prior prior) const {
    return {hypothesis_ids_, std::move(prior), test_ids_, costs_, outcomes_, classes_};
  }

  EcdInstance with_costs(std::vector<double> costs) const {
    return {hypothesis_ids_, prior_, test_ids_, std::move(costs), outcomes_, classes_};
  }

  EcdInstance for_mode(Mode mode) const {
    return mode == Mode::odt ? with_singleton_classes() : *this;
  }

 private:
  static std::optional<std::size_t> find(const std::vector<std::string>& ids,
                                         std::string_view id) {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
  }

  void validate() {
    const std::size_t n = hypothesis_ids_.size();
    const std::size_t m = test_ids_.size();
    if (n == 0) throw ValidationError("instance has no hypotheses");
    if (prior_.weights.size() != n)
      throw ValidationError("prior has " + std::to_string(prior_.weights.size()) +
                            " entries for " + std::to_string(n) + " hypotheses");
    double total = 0.0;
    for (std::size_t h = 0; h < n; ++h) {
      if (!(prior_.weights[h] >= 0.0))
        throw ValidationError("negative prior at hypothesis " + std::to_string(h));
      total += prior_.weights[h];
    }
    if (std::abs(total - 1.0) > kPriorTolerance)
      throw ValidationError("prior sums to " + std::to_string(total) + ", not 1");
    if (costs_.size() != m)
      throw ValidationError("cost vector length does not match test count");
    for (std::size_t t = 0; t < m; ++t)
      if (!(costs_[t] > 0.0) || !std::isfinite(costs_[t]))
        throw ValidationError("cost of test " + std::to_string(t) + " must be > 0");
    if (outcomes_.size() != n)
      throw ValidationError("outcome table has " + std::to_string(outcomes_.size()) +
                            " rows for " + std::to_string(n) + " hypotheses");
    num_outcomes_ = 1;
    for (std::size_t h = 0; h < n; ++h) {
      if (outcomes_[h].size() != m)
        throw ValidationError("outcome row " + std::to_string(h) + " has " +
                              std::to_string(outcomes_[h].size()) + " entries, expected " +
                              std::to_string(m));
      for (std::size_t t = 0; t < m; ++t) {
        if (outcomes_[h][t] < 0)
          throw ValidationError("invalid outcome label at [" + std::to_string(h) + "][" +
                                std::to_string(t) + "]");
        num_outcomes_ = std::max(num_outcomes_, outcomes_[h][t] + 1);
      }
    }
    std::map<std::vector<Outcome>, std::size_t> seen;
    for (std::size_t h = 0; h < n; ++h) {
      auto [it, inserted] = seen.emplace(outcomes_[h], h);
      if (!inserted)
        throw ValidationError("hypotheses " + std::to_string(it->second) + " and " +
                              std::to_string(h) + " have identical outcome rows");
    }
    class_of_.assign(n, n);
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      if (classes_[i].empty())
        throw ValidationError("class " + std::to_string(i) + " is empty");
      for (std::size_t h : classes_[i]) {
        if (h >= n)
          throw ValidationError("class " + std::to_string(i) + " names unknown hypothesis " +
                                std::to_string(h));
        if (class_of_[h] != n)
          throw ValidationError("hypothesis " + std::to_string(h) +
                                " appears in more than one class");
        class_of_[h] = i;
      }
    }
    for (std::size_t h = 0; h < n; ++h)
      if (class_of_[h] == n)
        throw ValidationError("hypothesis " + std::to_string(h) + " is in no class");
  }

  std::vector<std::string> hypothesis_ids_;
  Prior prior_;
  std::vector<std::string> test_ids_;
  std::vector<double> costs_;
  std::vector<std::vector<Outcome>> outcomes_;
  std::vector<std::vector<std::size_t>> classes_;
  std::vector<std::size_t> class_of_;
  int num_outcomes_ = 1;
};

struct Observation {
  std::size_t test;
  Outcome outcome;
  auto operator<=>(const Observation&) const = default;
};

// Ordered observations x_A. Consistency with an instance is checked by
// version_space(), which throws on an empty version space.
class PartialRealization {
 public:
  PartialRealization() = default;
  explicit PartialRealization(std::vector<Observation> obs) {
    for (const auto& o : obs) observe(o.test, o.outcome);
  }

  void observe(std::size_t test, Outcome outcome) {
    if (contains(test))
      throw ValidationError("test " + std::to_string(test) + " observed twice");
    observations_.push_back({test, outcome});
  }

  PartialRealization with(std::size_t test, Outcome outcome) const {
    PartialRealization next = *this;
    next.observe(test, outcome);
    return next;
  }

  bool contains(std::size_t test) const {
    return std::any_of(observations_.begin(), observations_.end(),
                       [&](const Observation& o) { return o.test == test; });
  }

  const std::vector<Observation>& observations() const { return observations_; }
  std::size_t size() const { return observations_.size(); }
  bool empty() const { return observations_.empty(); }

  std::vector<std::size_t> tests() const {
    std::vector<std::size_t> out;
    out.reserve(observations_.size());
    for (const auto& o : observations_) out.push_back(o.test);
    return out;
  }

 private:
  std::vector<Observation> observations_;
};

struct VersionSpace {
  std::vector<std::size_t> members;  // ascending
  double mass = 0.0;

  bool contains(std::size_t h) const {
    return std::binary_search(members.begin(), members.end(), h);
  }
};

inline bool matches(const EcdInstance& inst, std::size_t h, const PartialRealization& x) {
  for (const auto& o : x.observations())
    if (o.test >= inst.num_tests() || inst.outcome(h, o.test) != o.outcome) return false;
  return true;
}

inline VersionSpace version_space(const EcdInstance& inst, const PartialRealization& x) {
  VersionSpace vs;
  for (std::size_t h = 0; h < inst.num_hypotheses(); ++h) {
    if (inst.prior(h) > 0.0 && matches(inst, h, x)) {
      vs.members.push_back(h);
      vs.mass += inst.prior(h);
    }
  }
  if (vs.members.empty()) throw ValidationError("empty version space");
  return vs;
}

inline std::vector<double> posterior(const EcdInstance& inst, const VersionSpace& vs) {
  std::vector<double> p(inst.num_hypotheses(), 0.0);
  for (std::size_t h : vs.members) p[h] = inst.prior(h) / vs.mass;
  return p;
}

inline std::vector<double> posterior(const EcdInstance& inst, const PartialRealization& x) {
  return posterior(inst, version_space(inst, x));
}

inline std::vector<double> class_posterior(const EcdInstance& inst, const VersionSpace& vs) {
  std::vector<double> p(inst.num_classes(), 0.0);
  for (std::size_t h : vs.members) p[inst.class_of(h)] += inst.prior(h);
  for (double& v : p) v /= vs.mass;
  return p;
}

inline std::vector<double> class_posterior(const EcdInstance& inst,
                                           const PartialRealization& x) {
  return class_posterior(inst, version_space(inst, x));
}

inline bool is_terminal(const EcdInstance& inst, const VersionSpace& vs, Mode mode) {
  if (mode == Mode::odt) return vs.members.size() == 1;
  const std::size_t first = inst.class_of(vs.members.front());
  return std::all_of(vs.members.begin(), vs.members.end(),
                     [&](std::size_t h) { return inst.class_of(h) == first; });
}

inline bool is_terminal(const EcdInstance& inst, const PartialRealization& x, Mode mode) {
  return is_terminal(inst, version_space(inst, x), mode);
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "odt") return Mode::odt;
  if (s == "ecd") return Mode::ecd;
  return std::nullopt;
}

inline const char* to_string(Mode m) { return m == Mode::odt ? "odt" : "ecd"; }

}  // namespace ecd
