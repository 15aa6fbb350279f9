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

// Brute-force ground truth for small instances.
//
// optimal_expected_cost() solves
//   OPT(V) = 0                                    if V is terminal
//   OPT(V) = min_t c(t) + sum_y P(y | V) OPT(V_y)  otherwise
// over version spaces encoded as 64-bit masks. The recursion is memoized and
// branch-and-bound pruned: every node has the lower bound
//   c_min * H(class | V) / log2(max outcomes)
// (any class-identifying tree is a prefix code for the class), and the greedy
// edge-cutting policy supplies the initial upper bound.
//
// The property checkers enumerate every consistent partial realization and
// evaluate the edge-cutting objective from its definition, independent of
// the fast marginal path used by the policies.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecd/core.hpp"
#include "ecd/objectives.hpp"
#include "ecd/policies.hpp"

namespace ecd {

class OracleTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultMemoLimit = std::size_t{1} << 20;
inline constexpr double kPropertyTolerance = 1e-12;

using HypothesisMask = std::uint64_t;

struct OptResult {
  double cost = 0.0;
  std::optional<std::size_t> root_test;
  // Optimal test at every version space reachable under the optimal policy.
  std::map<HypothesisMask, std::size_t> policy;
  std::size_t memo_entries = 0;
};

namespace detail {

class OptimalSearch {
 public:
  OptimalSearch(const EcdInstance& inst, std::size_t memo_limit)
      : inst_(inst), memo_limit_(memo_limit) {
    const std::size_t n = inst.num_hypotheses();
    const std::size_t ny = static_cast<std::size_t>(inst.num_outcomes());
    outcome_masks_.assign(inst.num_tests(), std::vector<HypothesisMask>(ny, 0));
    for (std::size_t t = 0; t < inst.num_tests(); ++t)
      for (std::size_t h = 0; h < n; ++h)
        outcome_masks_[t][static_cast<std::size_t>(inst.outcome(h, t))] |= HypothesisMask{1} << h;
    min_cost_ = *std::min_element(inst.costs().begin(), inst.costs().end());
    log_outcomes_ = std::log2(std::max(2.0, static_cast<double>(ny)));
  }

  HypothesisMask root() const {
    HypothesisMask m = 0;
    for (std::size_t h = 0; h < inst_.num_hypotheses(); ++h)
      if (inst_.prior(h) > 0.0) m |= HypothesisMask{1} << h;
    return m;
  }

  double mass(HypothesisMask m) const {
    double s = 0.0;
    for (; m; m &= m - 1) s += inst_.prior(static_cast<std::size_t>(std::countr_zero(m)));
    return s;
  }

  bool terminal(HypothesisMask m) const {
    const std::size_t c = inst_.class_of(static_cast<std::size_t>(std::countr_zero(m)));
    for (; m; m &= m - 1)
      if (inst_.class_of(static_cast<std::size_t>(std::countr_zero(m))) != c) return false;
    return true;
  }

  double lower_bound(HypothesisMask m) const {
    std::vector<double> cls(inst_.num_classes(), 0.0);
    double total = 0.0;
    for (; m; m &= m - 1) {
      const auto h = static_cast<std::size_t>(std::countr_zero(m));
      cls[inst_.class_of(h)] += inst_.prior(h);
      total += inst_.prior(h);
    }
    double entropy = 0.0;
    for (double c : cls)
      if (c > 0.0) entropy -= (c / total) * std::log2(c / total);
    return min_cost_ * entropy / log_outcomes_ * (1.0 - 1e-12);
  }

  // Returns OPT(m) with exact = true when OPT(m) < ub; otherwise a lower
  // bound >= ub with exact = false.
  double solve(HypothesisMask m, double ub, bool& exact) {
    if (terminal(m)) {
      exact = true;
      return 0.0;
    }
    double lb = lower_bound(m);
    if (auto it = memo_.find(m); it != memo_.end()) {
      if (it->second.exact) {
        exact = true;
        return it->second.value;
      }
      lb = std::max(lb, it->second.value);
    }
    if (lb >= ub) {
      exact = false;
      return lb;
    }

    struct Child {
      HypothesisMask mask;
      double p;
      double lb;
    };
    struct Option {
      std::size_t test;
      double optimistic;
      std::vector<Child> children;
    };
    const double vmass = mass(m);
    std::vector<Option> options;
    for (std::size_t t = 0; t < inst_.num_tests(); ++t) {
      Option opt{t, inst_.cost(t), {}};
      for (HypothesisMask om : outcome_masks_[t]) {
        const HypothesisMask child = m & om;
        if (!child) continue;
        if (child == m) break;  // does not split V
        const double p = mass(child) / vmass;
        const double clb = terminal(child) ? 0.0 : lower_bound(child);
        opt.children.push_back({child, p, clb});
        opt.optimistic += p * clb;
      }
      if (opt.children.size() >= 2) options.push_back(std::move(opt));
    }
    std::stable_sort(options.begin(), options.end(),
                     [](const Option& a, const Option& b) { return a.optimistic < b.optimistic; });

    double best = ub;
    std::optional<std::size_t> best_test;
    for (auto& opt : options) {
      double total = opt.optimistic;
      if (total >= best) break;
      std::stable_sort(opt.children.begin(), opt.children.end(),
                       [](const Child& a, const Child& b) { return a.p > b.p; });
      bool all_exact = true;
      for (auto& ch : opt.children) {
        const double child_ub = (best - (total - ch.p * ch.lb)) / ch.p;
        bool child_exact = false;
        const double v = solve(ch.mask, child_ub, child_exact);
        total += ch.p * (v - ch.lb);
        ch.lb = v;
        if (!child_exact) {
          all_exact = false;
          break;
        }
      }
      if (all_exact && total < best) {
        best = total;
        best_test = opt.test;
      }
    }

    Entry& e = memo_[m];
    if (memo_.size() > memo_limit_)
      throw OracleTooLarge("exact search exceeded " + std::to_string(memo_limit_) +
                           " version spaces; compare policies by sampling instead");
    if (best_test) {
      e = {best, true, *best_test};
      exact = true;
      return best;
    }
    e = {std::max(lb, ub), false, 0};
    exact = false;
    return e.value;
  }

  void collect_policy(HypothesisMask m, std::map<HypothesisMask, std::size_t>& out) const {
    if (terminal(m)) return;
    auto it = memo_.find(m);
    if (it == memo_.end() || !it->second.exact) return;
    const std::size_t t = it->second.test;
    out[m] = t;
    for (HypothesisMask om : outcome_masks_[t])
      if (m & om) collect_policy(m & om, out);
  }

  std::size_t memo_size() const { return memo_.size(); }

 private:
  struct Entry {
    double value = 0.0;
    bool exact = false;
    std::size_t test = 0;
  };

  const EcdInstance& inst_;
  std::size_t memo_limit_;
  std::vector<std::vector<HypothesisMask>> outcome_masks_;
  std::unordered_map<HypothesisMask, Entry> memo_;
  double min_cost_ = 1.0;
  double log_outcomes_ = 1.0;
};

}  // namespace detail

inline OptResult optimal_expected_cost(const EcdInstance& instance, Mode mode = Mode::ecd,
                                       std::size_t memo_limit = kDefaultMemoLimit) {
  if (instance.num_hypotheses() > 64)
    throw OracleTooLarge("exact search supports at most 64 hypotheses; compare policies by "
                         "sampling instead");
  const EcdInstance inst = instance.for_mode(mode);
  detail::OptimalSearch search(inst, memo_limit);
  const HypothesisMask root = search.root();
  OptResult result;
  if (search.terminal(root)) return result;

  PolicySpec greedy;
  greedy.criterion = Criterion::ec2;
  double ub = std::numeric_limits<double>::infinity();
  try {
    ub = expected_cost(greedy, inst);
    ub = ub * (1.0 + 1e-9) + 1e-12;
  } catch (const PolicyStalled&) {
  }
  bool exact = false;
  const double value = search.solve(root, ub, exact);
  if (!exact) throw PolicyStalled("no feasible policy: some classes cannot be separated");
  result.cost = value;
  search.collect_policy(root, result.policy);
  result.root_test = result.policy.at(root);
  result.memo_entries = search.memo_size();
  return result;
}

// Property checks ----------------------------------------------------------

struct PropertyViolation {
  std::vector<Observation> smaller;  // x_A
  std::vector<Observation> larger;   // x_B (submodularity only)
  std::size_t test = 0;
  Outcome outcome = 0;               // monotonicity only
  double lhs = 0.0;
  double rhs = 0.0;
};

struct PropertyReport {
  std::string property;
  bool pass = true;
  std::size_t checked = 0;
  std::size_t violation_count = 0;
  std::vector<PropertyViolation> violations;  // first kMaxStoredViolations
};

inline constexpr std::size_t kMaxStoredViolations = 1000;

using BenefitFn =
    std::function<double(const EcdInstance&, const PartialRealization&, std::size_t)>;

// E[f_EC(A) | x_A] from the edge definition.
inline double expected_f_ec(const EcdInstance& inst, const PartialRealization& x) {
  const VersionSpace vs = version_space(inst, x);
  const auto tests = x.tests();
  double e = 0.0;
  for (std::size_t h : vs.members) e += inst.prior(h) / vs.mass * f_ec(inst, tests, h);
  return e;
}

// Delta_EC(t | x_A) = E[f_EC(A + t, h) - f_EC(A, h) | x_A] from the definition.
inline double ec_benefit_by_definition(const EcdInstance& inst, const PartialRealization& x,
                                       std::size_t test) {
  const VersionSpace vs = version_space(inst, x);
  auto tests = x.tests();
  auto grown = tests;
  grown.push_back(test);
  double e = 0.0;
  for (std::size_t h : vs.members)
    e += inst.prior(h) / vs.mass * (f_ec(inst, grown, h) - f_ec(inst, tests, h));
  return e;
}

namespace detail {

using PartialKey = std::vector<int>;  // per test: outcome, or -1 if unobserved

inline PartialRealization from_key(const PartialKey& key) {
  PartialRealization x;
  for (std::size_t t = 0; t < key.size(); ++t)
    if (key[t] >= 0) x.observe(t, key[t]);
  return x;
}

inline std::vector<PartialKey> consistent_partials(const EcdInstance& inst) {
  const std::size_t m = inst.num_tests();
  if (m > 16 || inst.num_hypotheses() * (std::size_t{1} << m) > (std::size_t{1} << 20))
    throw OracleTooLarge("instance too large for exhaustive property checks");
  std::set<PartialKey> keys;
  for (std::size_t h = 0; h < inst.num_hypotheses(); ++h) {
    if (inst.prior(h) <= 0.0) continue;
    for (std::uint32_t b = 0; b < (1U << m); ++b) {
      PartialKey key(m, -1);
      for (std::size_t t = 0; t < m; ++t)
        if (b >> t & 1U) key[t] = inst.outcome(h, t);
      keys.insert(std::move(key));
    }
  }
  return {keys.begin(), keys.end()};
}

inline void record(PropertyReport& r, PropertyViolation v) {
  ++r.violation_count;
  r.pass = false;
  if (r.violations.size() < kMaxStoredViolations) r.violations.push_back(std::move(v));
}

}  // namespace detail

// Checks Delta(t | x_B) <= Delta(t | x_A) + tol for every consistent x_A < x_B
// and every test t outside B.
inline PropertyReport check_adaptive_submodularity(const EcdInstance& inst,
                                                   const BenefitFn& benefit =
                                                       ec_benefit_by_definition) {
  PropertyReport report;
  report.property = "adaptive_submodularity";
  const std::size_t m = inst.num_tests();
  const auto partials = detail::consistent_partials(inst);
  std::map<std::pair<detail::PartialKey, std::size_t>, double> cache;
  auto delta = [&](const detail::PartialKey& key, std::size_t t) {
    auto [it, inserted] = cache.try_emplace({key, t}, 0.0);
    if (inserted) it->second = benefit(inst, detail::from_key(key), t);
    return it->second;
  };
  for (const auto& larger : partials) {
    std::uint32_t bmask = 0;
    for (std::size_t t = 0; t < m; ++t)
      if (larger[t] >= 0) bmask |= 1U << t;
    for (std::size_t t = 0; t < m; ++t) {
      if (bmask >> t & 1U) continue;
      const double db = delta(larger, t);
      // Every submask of B gives a subvector x_A.
      for (std::uint32_t a = bmask;; a = (a - 1) & bmask) {
        if (a != bmask) {
          detail::PartialKey smaller(m, -1);
          for (std::size_t s = 0; s < m; ++s)
            if (a >> s & 1U) smaller[s] = larger[s];
          const double da = delta(smaller, t);
          ++report.checked;
          if (db > da + kPropertyTolerance)
            detail::record(report, {detail::from_key(smaller).observations(),
                                    detail::from_key(larger).observations(), t, 0, db, da});
        }
        if (a == 0) break;
      }
    }
  }
  return report;
}

// Checks E[f_EC(A) | x_A] <= E[f_EC(A + t) | x_A, X_t = y] for every
// consistent x_A, t outside A and outcome y of positive probability.
inline PropertyReport check_strong_monotonicity(const EcdInstance& inst) {
  PropertyReport report;
  report.property = "strong_adaptive_monotonicity";
  for (const auto& key : detail::consistent_partials(inst)) {
    const PartialRealization x = detail::from_key(key);
    const VersionSpace vs = version_space(inst, x);
    const double before = expected_f_ec(inst, x);
    for (std::size_t t = 0; t < inst.num_tests(); ++t) {
      if (key[t] >= 0) continue;
      std::set<Outcome> reachable;
      for (std::size_t h : vs.members) reachable.insert(inst.outcome(h, t));
      for (Outcome y : reachable) {
        const double after = expected_f_ec(inst, x.with(t, y));
        ++report.checked;
        if (before > after + kPropertyTolerance)
          detail::record(report, {x.observations(), {}, t, y, before, after});
      }
    }
  }
  return report;
}

}  // namespace ecd
