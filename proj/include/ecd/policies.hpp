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

// Greedy adaptive policies: pick an unobserved test maximizing
// benefit / cost, observe, repeat until the version space is terminal.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ecd/core.hpp"
#include "ecd/objectives.hpp"
#include "ecd/rng.hpp"

namespace ecd {

enum class Criterion { ec2, effecxtive, gbs, ig_class, ig_hyp, us, voi, random };
enum class TieBreak { lowest_test_index, seeded_random };

inline constexpr Criterion kAllCriteria[] = {Criterion::ec2,     Criterion::effecxtive,
                                             Criterion::gbs,     Criterion::ig_class,
                                             Criterion::ig_hyp,  Criterion::us,
                                             Criterion::voi,     Criterion::random};

inline const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::ec2: return "ec2";
    case Criterion::effecxtive: return "effecxtive";
    case Criterion::gbs: return "gbs";
    case Criterion::ig_class: return "ig_class";
    case Criterion::ig_hyp: return "ig_hyp";
    case Criterion::us: return "us";
    case Criterion::voi: return "voi";
    case Criterion::random: return "random";
  }
  return "?";
}

inline std::optional<Criterion> parse_criterion(std::string_view s) {
  for (Criterion c : kAllCriteria)
    if (s == to_string(c)) return c;
  return std::nullopt;
}

struct PolicySpec {
  Criterion criterion = Criterion::ec2;
  Mode mode = Mode::ecd;
  std::optional<std::size_t> budget;  // defaults to the number of tests
  TieBreak tie_break = TieBreak::lowest_test_index;
  std::uint64_t seed = 0;
  LossTable loss;  // voi only; empty = classes under 0-1 loss
};

struct PolicyTrace {
  std::vector<Observation> steps;
  double cost = 0.0;
  bool terminal = false;
  std::vector<std::size_t> final_version_space;
  std::vector<double> final_class_posterior;
};

class PolicyStalled : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double benefit(Criterion c, const EcdInstance& inst, const VersionSpace& vs,
                      std::size_t test, const LossTable& loss = {}) {
  switch (c) {
    case Criterion::ec2: return delta_ec_fast(inst, vs, test);
    case Criterion::effecxtive: return delta_eff(inst, vs, test);
    case Criterion::gbs: return delta_gbs(inst, vs, test);
    case Criterion::ig_class: return delta_ig(inst, vs, test, Level::cls);
    case Criterion::ig_hyp: return delta_ig(inst, vs, test, Level::hypothesis);
    case Criterion::us: return delta_us(inst, vs, test);
    case Criterion::voi: return delta_voi(inst, vs, test, loss);
    case Criterion::random: return 0.0;
  }
  return 0.0;
}

namespace detail {

// Seed for decisions taken at this partial realization, so selection stays a
// pure function of (spec, history).
inline std::uint64_t history_seed(std::uint64_t seed, const PartialRealization& x) {
  std::uint64_t s = derive_seed(seed, {x.size()});
  for (const auto& o : x.observations())
    s = derive_seed(s, {o.test, static_cast<std::uint64_t>(o.outcome)});
  return s;
}

inline bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

// `inst` must already be the mode-adjusted instance.
inline std::optional<std::size_t> select_on(const PolicySpec& spec, const EcdInstance& inst,
                                            const VersionSpace& vs,
                                            const PartialRealization& x) {
  if (is_terminal(inst, vs, Mode::ecd)) return std::nullopt;
  std::vector<std::size_t> candidates;
  for (std::size_t t = 0; t < inst.num_tests(); ++t)
    if (!x.contains(t)) candidates.push_back(t);
  if (candidates.empty()) return std::nullopt;

  if (spec.criterion == Criterion::random) {
    Rng rng(history_seed(spec.seed, x));
    return candidates[rng.below(candidates.size())];
  }

  std::vector<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t t : candidates) {
    const double score = benefit(spec.criterion, inst, vs, t, spec.loss) / inst.cost(t);
    if (best.empty() || (score > best_score && !nearly_equal(score, best_score))) {
      best.assign(1, t);
      best_score = score;
    } else if (nearly_equal(score, best_score)) {
      best.push_back(t);
    }
  }
  if (spec.tie_break == TieBreak::lowest_test_index || best.size() == 1) return best.front();
  Rng rng(history_seed(spec.seed, x));
  return best[rng.below(best.size())];
}

}  // namespace detail

inline std::optional<std::size_t> select_next(const PolicySpec& spec, const EcdInstance& instance,
                                              const PartialRealization& partial) {
  const EcdInstance inst = instance.for_mode(spec.mode);
  return detail::select_on(spec, inst, version_space(inst, partial), partial);
}

inline PolicyTrace run_policy(const PolicySpec& spec, const EcdInstance& instance,
                              std::size_t truth, std::uint64_t seed) {
  if (truth >= instance.num_hypotheses()) throw ValidationError("unknown truth hypothesis");
  if (spec.budget && *spec.budget < 1) throw ValidationError("budget must be >= 1");
  const EcdInstance inst = instance.for_mode(spec.mode);
  PolicySpec seeded = spec;
  seeded.seed = seed;
  const std::size_t budget = spec.budget.value_or(inst.num_tests());

  PolicyTrace trace;
  PartialRealization x;
  VersionSpace vs = version_space(inst, x);
  while (!is_terminal(inst, vs, Mode::ecd) && x.size() < budget) {
    auto t = detail::select_on(seeded, inst, vs, x);
    if (!t) break;
    const Outcome y = inst.outcome(truth, *t);
    x.observe(*t, y);
    trace.steps.push_back({*t, y});
    trace.cost += inst.cost(*t);
    vs = version_space(inst, x);
  }
  trace.terminal = is_terminal(inst, vs, Mode::ecd);
  trace.final_version_space = vs.members;
  trace.final_class_posterior = class_posterior(instance, vs);
  return trace;
}

// Runs a fixed test order until the version space is terminal.
inline PolicyTrace run_sequence(const EcdInstance& instance, const std::vector<std::size_t>& order,
                                std::size_t truth, Mode mode = Mode::ecd) {
  const EcdInstance inst = instance.for_mode(mode);
  PolicyTrace trace;
  PartialRealization x;
  VersionSpace vs = version_space(inst, x);
  for (std::size_t t : order) {
    if (is_terminal(inst, vs, Mode::ecd)) break;
    const Outcome y = inst.outcome(truth, t);
    x.observe(t, y);
    trace.steps.push_back({t, y});
    trace.cost += inst.cost(t);
    vs = version_space(inst, x);
  }
  trace.terminal = is_terminal(inst, vs, Mode::ecd);
  trace.final_version_space = vs.members;
  trace.final_class_posterior = class_posterior(instance, vs);
  return trace;
}

// sum_h P(h) c(T(pi, h)), one run per hypothesis with positive prior. Every
// run shares spec.seed, so randomized criteria are evaluated as one fixed
// adaptive policy rather than a different policy per truth.
inline double expected_cost(const PolicySpec& spec, const EcdInstance& inst) {
  double total = 0.0;
  for (std::size_t h = 0; h < inst.num_hypotheses(); ++h) {
    if (inst.prior(h) <= 0.0) continue;
    const PolicyTrace trace = run_policy(spec, inst, h, spec.seed);
    if (!trace.terminal && !spec.budget)
      throw PolicyStalled("policy stalled: no terminal state reached for hypothesis " +
                          inst.hypothesis_id(h));
    total += inst.prior(h) * trace.cost;
  }
  return total;
}

}  // namespace ecd
