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

// Instance generators: the two hard families for mass-reduction and
// posterior-based greedy policies, random small instances for exhaustive
// checks, and the one-flipped-test noise model.

#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "ecd/core.hpp"
#include "ecd/noisy.hpp"
#include "ecd/rng.hpp"

namespace ecd {

struct GbsBadParams {
  std::size_t n = 4;
};

struct PosteriorBadParams {
  std::size_t q = 1;
  std::size_t dummy_count = 0;
};

// Uniform prior over h_1..h_n, test t reveals 1{i = t}; classes
// {h_1..h_{n-1}} and {h_n}. Test n alone settles the class.
inline EcdInstance gen_gbs_bad(const GbsBadParams& p) {
  if (p.n < 2) throw ValidationError("gbs-bad needs n >= 2");
  const std::size_t n = p.n;
  std::vector<std::string> hyp, tests;
  std::vector<std::vector<Outcome>> rows(n, std::vector<Outcome>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    hyp.push_back("h" + std::to_string(i + 1));
    tests.push_back("t" + std::to_string(i + 1));
    rows[i][i] = 1;
  }
  std::vector<std::size_t> big;
  for (std::size_t i = 0; i + 1 < n; ++i) big.push_back(i);
  return {std::move(hyp), normalize_prior(std::vector<double>(n, 1.0)), std::move(tests),
          std::vector<double>(n, 1.0), std::move(rows), {std::move(big), {n - 1}}};
}

// Test-index layout of gen_posterior_bad.
struct PosteriorBadLayout {
  std::size_t q;
  std::size_t classes() const { return std::size_t{1} << q; }
  std::size_t value_test() const { return 0; }                  // t_0
  std::size_t bit_test(std::size_t k) const { return k; }       // t_k, 1 <= k <= q
  std::size_t seq_test(std::size_t k) const { return q + k; }   // 1 <= k <= 2^q
  std::size_t dummy_test(std::size_t k) const { return q + classes() + k; }  // 1-based
  std::size_t hypothesis(std::size_t a, int v) const { return 2 * (a - 1) + static_cast<std::size_t>(v); }
  // Reference policy: t_0 followed by t_1..t_q.
  std::vector<std::size_t> reference_order() const {
    std::vector<std::size_t> order{value_test()};
    for (std::size_t k = 1; k <= q; ++k) order.push_back(bit_test(k));
    return order;
  }
};

// 2^q classes {h_{a,0}, h_{a,1}} under a uniform prior. t_0 reveals v; t_k
// reveals 1{bit_k(a-1) = v}, which is useless until v is known; seq_k
// reveals 1{a = k}; dummies always read 0.
inline EcdInstance gen_posterior_bad(const PosteriorBadParams& p) {
  if (p.q < 1) throw ValidationError("posterior-bad needs q >= 1");
  if (p.q > 20) throw ValidationError("posterior-bad q too large");
  const PosteriorBadLayout lay{p.q};
  const std::size_t classes = lay.classes();
  const std::size_t n = 2 * classes;
  const std::size_t m = 1 + p.q + classes + p.dummy_count;

  std::vector<std::string> tests{"t0"};
  for (std::size_t k = 1; k <= p.q; ++k) tests.push_back("t" + std::to_string(k));
  for (std::size_t k = 1; k <= classes; ++k) tests.push_back("seq" + std::to_string(k));
  for (std::size_t k = 1; k <= p.dummy_count; ++k) tests.push_back("dummy" + std::to_string(k));

  std::vector<std::string> hyp(n);
  std::vector<std::vector<Outcome>> rows(n, std::vector<Outcome>(m, 0));
  std::vector<std::vector<std::size_t>> blocks(classes);
  for (std::size_t a = 1; a <= classes; ++a) {
    for (int v = 0; v <= 1; ++v) {
      const std::size_t h = lay.hypothesis(a, v);
      hyp[h] = "h" + std::to_string(a) + "_" + std::to_string(v);
      auto& row = rows[h];
      row[lay.value_test()] = v;
      for (std::size_t k = 1; k <= p.q; ++k) {
        const int bit = static_cast<int>(((a - 1) >> (k - 1)) & 1U);
        row[lay.bit_test(k)] = bit == v ? 1 : 0;
      }
      row[lay.seq_test(a)] = 1;
      blocks[a - 1].push_back(h);
    }
  }
  return {std::move(hyp), normalize_prior(std::vector<double>(n, 1.0)), std::move(tests),
          std::vector<double>(m, 1.0), std::move(rows), std::move(blocks)};
}

struct RandomEcdParams {
  std::size_t hypotheses = 5;
  std::size_t tests = 5;
  int outcomes = 2;
  std::size_t min_classes = 2;
  std::size_t max_classes = 3;
  // Prior weights are k / prior_denominator with integer k >= 1; keep this a
  // power of two so the prior is dyadic.
  std::size_t prior_denominator = 64;
  bool unit_costs = true;
};

// Random instance with distinct outcome rows, a dyadic prior and every class
// nonempty. Non-unit costs are drawn from {0.5, 1, 2}.
inline EcdInstance gen_random_ecd(const RandomEcdParams& p, Rng& rng) {
  const std::size_t n = p.hypotheses;
  if (n < 1 || p.tests < 1 || p.outcomes < 1) throw ValidationError("empty random instance");
  double capacity = 1.0;
  for (std::size_t t = 0; t < p.tests && capacity < 1e18; ++t) capacity *= p.outcomes;
  if (capacity < static_cast<double>(n))
    throw ValidationError("too few distinct outcome rows for the hypothesis count");
  if (p.prior_denominator < n) throw ValidationError("prior denominator below hypothesis count");
  const std::size_t kmin = std::min(std::max<std::size_t>(p.min_classes, 1), n);
  const std::size_t kmax = std::min(std::max(p.max_classes, kmin), n);

  std::set<std::vector<Outcome>> seen;
  std::vector<std::vector<Outcome>> rows;
  while (rows.size() < n) {
    std::vector<Outcome> row(p.tests);
    for (auto& o : row) o = static_cast<Outcome>(rng.below(static_cast<std::uint64_t>(p.outcomes)));
    if (seen.insert(row).second) rows.push_back(std::move(row));
  }

  // n - 1 distinct cut points in [1, D - 1] split D into n positive parts.
  std::set<std::size_t> cuts;
  while (cuts.size() + 1 < n) cuts.insert(1 + rng.below(p.prior_denominator - 1));
  std::vector<double> weights;
  std::size_t prev = 0;
  for (std::size_t c : cuts) {
    weights.push_back(static_cast<double>(c - prev));
    prev = c;
  }
  weights.push_back(static_cast<double>(p.prior_denominator - prev));

  const std::size_t k = kmin + rng.below(kmax - kmin + 1);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::vector<std::size_t>> classes(k);
  for (std::size_t i = 0; i < n; ++i)
    classes[i < k ? i : rng.below(k)].push_back(order[i]);
  for (auto& c : classes) std::sort(c.begin(), c.end());

  std::vector<double> costs(p.tests, 1.0);
  if (!p.unit_costs) {
    constexpr double kCosts[] = {0.5, 1.0, 2.0};
    for (auto& c : costs) c = kCosts[rng.below(3)];
  }
  std::vector<std::string> hyp, tests;
  for (std::size_t i = 0; i < n; ++i) hyp.push_back("h" + std::to_string(i + 1));
  for (std::size_t t = 0; t < p.tests; ++t) tests.push_back("t" + std::to_string(t + 1));
  return {std::move(hyp), normalize_prior(weights), std::move(tests), std::move(costs),
          std::move(rows), std::move(classes)};
}

// Exactly one of the m binary tests, chosen uniformly, reports a flipped
// outcome. theta_k flips test k.
inline NoisyModel flip_one_test_model(const EcdInstance& base) {
  if (base.num_outcomes() > 2) throw ValidationError("flip model needs binary outcomes");
  NoisyModel model;
  const std::size_t n = base.num_hypotheses();
  const std::size_t m = base.num_tests();
  model.hypothesis_ids = base.hypothesis_ids();
  model.prior = base.prior_dist().weights;
  model.test_ids = base.test_ids();
  model.costs = base.costs();
  for (std::size_t k = 0; k < m; ++k) model.noise_ids.push_back("flip" + base.test_id(k));
  model.noise_given_h.assign(n, std::vector<double>(m, 1.0 / static_cast<double>(m)));
  model.outcome_vectors.resize(n);
  for (std::size_t h = 0; h < n; ++h) {
    for (std::size_t k = 0; k < m; ++k) {
      auto row = base.row(h);
      row[k] = 1 - row[k];
      model.outcome_vectors[h].push_back(std::move(row));
    }
  }
  return model;
}

}  // namespace ecd
