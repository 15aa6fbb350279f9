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

// Expected marginal benefits of running one more test.
//
// Every benefit except the edge-cutting one is a function of a single table
// alpha(i, y): the prior mass of version-space hypotheses in class i whose
// outcome on the candidate test is y. The table is filled in one pass over
// the version space; the noisy econ domain fills the same table from
// likelihood-weighted posteriors and reuses these formulas.
//
// All functions return benefits, never benefit/cost ratios. Entropies are in
// bits with 0 log 0 = 0.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ecd/core.hpp"

namespace ecd {

struct MarginalQuery {
  const EcdInstance& instance;
  const PartialRealization& partial;
  std::size_t test;
};

enum class Level { hypothesis, cls };

// alpha(i, y) with row-major storage; masses are unnormalized.
class OutcomeMassTable {
 public:
  OutcomeMassTable(std::size_t classes, std::size_t outcomes)
      : classes_(classes), outcomes_(outcomes), alpha_(classes * outcomes, 0.0) {}

  void add(std::size_t i, std::size_t y, double mass) { alpha_[i * outcomes_ + y] += mass; }
  double at(std::size_t i, std::size_t y) const { return alpha_[i * outcomes_ + y]; }
  std::size_t classes() const { return classes_; }
  std::size_t outcomes() const { return outcomes_; }

  double outcome_mass(std::size_t y) const {
    double s = 0.0;
    for (std::size_t i = 0; i < classes_; ++i) s += at(i, y);
    return s;
  }
  double class_mass(std::size_t i) const {
    double s = 0.0;
    for (std::size_t y = 0; y < outcomes_; ++y) s += at(i, y);
    return s;
  }
  double total() const {
    double s = 0.0;
    for (double a : alpha_) s += a;
    return s;
  }

 private:
  std::size_t classes_;
  std::size_t outcomes_;
  std::vector<double> alpha_;
};

inline OutcomeMassTable outcome_mass_table(const EcdInstance& inst, const VersionSpace& vs,
                                           std::size_t test, Level level = Level::cls) {
  const std::size_t k = level == Level::cls ? inst.num_classes() : inst.num_hypotheses();
  OutcomeMassTable table(k, static_cast<std::size_t>(inst.num_outcomes()));
  for (std::size_t h : vs.members) {
    const std::size_t i = level == Level::cls ? inst.class_of(h) : h;
    table.add(i, static_cast<std::size_t>(inst.outcome(h, test)), inst.prior(h));
  }
  return table;
}

namespace detail {

inline double entropy_bits(const std::vector<double>& masses, double total) {
  double h = 0.0;
  for (double m : masses) {
    if (m <= 0.0) continue;
    const double p = m / total;
    h -= p * std::log2(p);
  }
  return h;
}

inline double clamp_nonnegative(double x) { return x < 0.0 ? 0.0 : x; }

}  // namespace detail

// Expected decrease of the class Gini weight 1 - sum_i P(H_i)^2.
inline double gini_gain(const OutcomeMassTable& t) {
  const double total = t.total();
  if (total <= 0.0) return 0.0;
  double before = 0.0;
  for (std::size_t i = 0; i < t.classes(); ++i) {
    const double b = t.class_mass(i);
    before += b * b;
  }
  before /= total * total;
  double after = 0.0;
  for (std::size_t y = 0; y < t.outcomes(); ++y) {
    const double my = t.outcome_mass(y);
    if (my <= 0.0) continue;
    double sq = 0.0;
    for (std::size_t i = 0; i < t.classes(); ++i) sq += t.at(i, y) * t.at(i, y);
    after += sq / (my * total);
  }
  return detail::clamp_nonnegative(after - before);
}

inline double entropy_gain(const OutcomeMassTable& t) {
  const double total = t.total();
  if (total <= 0.0) return 0.0;
  std::vector<double> col(t.classes());
  for (std::size_t i = 0; i < t.classes(); ++i) col[i] = t.class_mass(i);
  const double before = detail::entropy_bits(col, total);
  double after = 0.0;
  for (std::size_t y = 0; y < t.outcomes(); ++y) {
    const double my = t.outcome_mass(y);
    if (my <= 0.0) continue;
    for (std::size_t i = 0; i < t.classes(); ++i) col[i] = t.at(i, y);
    after += (my / total) * detail::entropy_bits(col, my);
  }
  return detail::clamp_nonnegative(before - after);
}

// Value of information for deciding the class under 0-1 loss.
inline double zero_one_voi(const OutcomeMassTable& t) {
  const double total = t.total();
  if (total <= 0.0) return 0.0;
  double prior_best = 0.0;
  for (std::size_t i = 0; i < t.classes(); ++i) prior_best = std::max(prior_best, t.class_mass(i));
  double post_best = 0.0;
  for (std::size_t y = 0; y < t.outcomes(); ++y) {
    double best = 0.0;
    for (std::size_t i = 0; i < t.classes(); ++i) best = std::max(best, t.at(i, y));
    post_best += best;
  }
  return detail::clamp_nonnegative((post_best - prior_best) / total);
}

// Shannon entropy of the predictive outcome distribution.
inline double predictive_entropy(const OutcomeMassTable& t) {
  const double total = t.total();
  if (total <= 0.0) return 0.0;
  std::vector<double> m(t.outcomes());
  for (std::size_t y = 0; y < t.outcomes(); ++y) m[y] = t.outcome_mass(y);
  return detail::entropy_bits(m, total);
}

// P(V) - sum_y P(y | x_A) P(V_y), with P(V) the unnormalized table total.
inline double mass_reduction(const OutcomeMassTable& t) {
  const double total = t.total();
  if (total <= 0.0) return 0.0;
  double kept = 0.0;
  for (std::size_t y = 0; y < t.outcomes(); ++y) {
    const double my = t.outcome_mass(y);
    kept += my * my;
  }
  return detail::clamp_nonnegative(total - kept / total);
}

// Weight of the inter-class edges cut by running `tests` when `truth` is
// realized; evaluated straight from the edge definition.
inline double f_ec(const EcdInstance& inst, const std::vector<std::size_t>& tests,
                   std::size_t truth) {
  const std::size_t n = inst.num_hypotheses();
  std::vector<char> ruled_out(n, 0);
  for (std::size_t h = 0; h < n; ++h)
    for (std::size_t t : tests)
      if (inst.outcome(h, t) != inst.outcome(truth, t)) ruled_out[h] = 1;
  double w = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (inst.class_of(a) != inst.class_of(b) && (ruled_out[a] || ruled_out[b]))
        w += inst.prior(a) * inst.prior(b);
  return w;
}

// Total inter-class edge weight, summed pairwise.
inline double total_edge_weight(const EcdInstance& inst) {
  double w = 0.0;
  for (std::size_t a = 0; a < inst.num_hypotheses(); ++a)
    for (std::size_t b = a + 1; b < inst.num_hypotheses(); ++b)
      if (inst.class_of(a) != inst.class_of(b)) w += inst.prior(a) * inst.prior(b);
  return w;
}

inline double f_gbs(const EcdInstance& inst, const std::vector<std::size_t>& tests,
                    std::size_t truth) {
  double vmass = 0.0;
  for (std::size_t h = 0; h < inst.num_hypotheses(); ++h) {
    bool consistent = inst.prior(h) > 0.0;
    for (std::size_t t : tests)
      if (inst.outcome(h, t) != inst.outcome(truth, t)) consistent = false;
    if (consistent) vmass += inst.prior(h);
  }
  return 1.0 - vmass + inst.prior(truth);
}

// Edge-cutting benefit by enumerating every surviving edge for every outcome.
// O(|V|^2 * outcomes); kept as the reference for the fast path.
inline double delta_ec_naive(const EcdInstance& inst, const VersionSpace& vs, std::size_t test) {
  const auto& v = vs.members;
  double delta = 0.0;
  for (Outcome y = 0; y < inst.num_outcomes(); ++y) {
    double my = 0.0;
    for (std::size_t h : v)
      if (inst.outcome(h, test) == y) my += inst.prior(h);
    if (my <= 0.0) continue;
    double cut = 0.0;
    for (std::size_t a = 0; a < v.size(); ++a) {
      for (std::size_t b = a + 1; b < v.size(); ++b) {
        const std::size_t ha = v[a], hb = v[b];
        if (inst.class_of(ha) == inst.class_of(hb)) continue;
        if (inst.outcome(ha, test) != y || inst.outcome(hb, test) != y)
          cut += inst.prior(ha) * inst.prior(hb);
      }
    }
    delta += (my / vs.mass) * cut;
  }
  return delta;
}

// Edge-cutting benefit in one pass over the version space. With
// alpha(i,y) = P(H_i and V_y) and beta(i) = P(H_i and V), the surviving edge
// weight of a mass vector eta is ((sum eta)^2 - sum eta^2) / 2, and both sums
// are maintained incrementally as hypotheses are added.
inline double delta_ec_fast(const EcdInstance& inst, const VersionSpace& vs, std::size_t test) {
  const std::size_t ny = static_cast<std::size_t>(inst.num_outcomes());
  std::vector<double> alpha(inst.num_classes() * ny, 0.0);
  std::vector<double> beta(inst.num_classes(), 0.0);
  std::vector<double> sum_y(ny, 0.0), sq_y(ny, 0.0);
  double sum_b = 0.0, sq_b = 0.0;
  for (std::size_t h : vs.members) {
    const double p = inst.prior(h);
    const std::size_t i = inst.class_of(h);
    const std::size_t y = static_cast<std::size_t>(inst.outcome(h, test));
    double& a = alpha[i * ny + y];
    sq_y[y] += p * (2.0 * a + p);
    a += p;
    sum_y[y] += p;
    sq_b += p * (2.0 * beta[i] + p);
    beta[i] += p;
    sum_b += p;
  }
  const double before = sum_b * sum_b - sq_b;
  double delta = 0.0;
  for (std::size_t y = 0; y < ny; ++y) {
    if (sum_y[y] <= 0.0) continue;
    const double after = sum_y[y] * sum_y[y] - sq_y[y];
    delta += (sum_y[y] / sum_b) * 0.5 * (before - after);
  }
  return detail::clamp_nonnegative(delta);
}

inline double delta_gbs(const EcdInstance& inst, const VersionSpace& vs, std::size_t test) {
  return mass_reduction(outcome_mass_table(inst, vs, test, Level::cls));
}

inline double delta_ig(const EcdInstance& inst, const VersionSpace& vs, std::size_t test,
                       Level level) {
  return entropy_gain(outcome_mass_table(inst, vs, test, level));
}

inline double delta_us(const EcdInstance& inst, const VersionSpace& vs, std::size_t test) {
  return predictive_entropy(outcome_mass_table(inst, vs, test, Level::cls));
}

inline double delta_eff(const EcdInstance& inst, const VersionSpace& vs, std::size_t test) {
  return gini_gain(outcome_mass_table(inst, vs, test, Level::cls));
}

// Decisions with loss[d][h]. An empty table means the classes themselves are
// the decisions under 0-1 loss.
struct LossTable {
  std::vector<std::vector<double>> loss;

  static LossTable zero_one_classes(const EcdInstance& inst) {
    LossTable t;
    t.loss.assign(inst.num_classes(), std::vector<double>(inst.num_hypotheses(), 1.0));
    for (std::size_t h = 0; h < inst.num_hypotheses(); ++h) t.loss[inst.class_of(h)][h] = 0.0;
    return t;
  }
};

inline double delta_voi(const EcdInstance& inst, const VersionSpace& vs, std::size_t test,
                        const LossTable& table) {
  if (table.loss.empty()) return zero_one_voi(outcome_mass_table(inst, vs, test, Level::cls));
  auto min_risk = [&](auto&& member) {
    double best = 0.0;
    bool first = true;
    for (const auto& row : table.loss) {
      double r = 0.0;
      for (std::size_t h : vs.members)
        if (member(h)) r += inst.prior(h) * row[h];
      if (first || r < best) best = r;
      first = false;
    }
    return best;
  };
  const double before = min_risk([](std::size_t) { return true; });
  double after = 0.0;
  for (Outcome y = 0; y < inst.num_outcomes(); ++y)
    after += min_risk([&](std::size_t h) { return inst.outcome(h, test) == y; });
  return detail::clamp_nonnegative((before - after) / vs.mass);
}

namespace detail {
inline VersionSpace checked_vs(const MarginalQuery& q) {
  if (q.test >= q.instance.num_tests())
    throw ValidationError("unknown test " + std::to_string(q.test));
  if (q.partial.contains(q.test))
    throw ValidationError("test " + std::to_string(q.test) + " already observed");
  return version_space(q.instance, q.partial);
}
}  // namespace detail

inline double delta_ec_naive(const MarginalQuery& q) {
  return delta_ec_naive(q.instance, detail::checked_vs(q), q.test);
}
inline double delta_ec_fast(const MarginalQuery& q) {
  return delta_ec_fast(q.instance, detail::checked_vs(q), q.test);
}
inline double delta_gbs(const MarginalQuery& q) {
  return delta_gbs(q.instance, detail::checked_vs(q), q.test);
}
inline double delta_ig(const MarginalQuery& q, Level level) {
  return delta_ig(q.instance, detail::checked_vs(q), q.test, level);
}
inline double delta_us(const MarginalQuery& q) {
  return delta_us(q.instance, detail::checked_vs(q), q.test);
}
inline double delta_eff(const MarginalQuery& q) {
  return delta_eff(q.instance, detail::checked_vs(q), q.test);
}
inline double delta_voi(const MarginalQuery& q, const LossTable& table = {}) {
  return delta_voi(q.instance, detail::checked_vs(q), q.test, table);
}

}  // namespace ecd
