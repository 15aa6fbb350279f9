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

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "ecd/econ.hpp"
#include "ecd/objectives.hpp"

namespace ecd::econ {
namespace {

const TheoryPoint kEv{Theory::ev, {}};
const TheoryPoint kPt{Theory::pt, {0.9, 2.2, 0.9}};
const TheoryPoint kMvs{Theory::mvs, {0.8, 0.25, 0.25}};

// Mean payoff in tenths, exact.
int mean_tenths(const Lottery& l) { return l.hundredths[2] - l.hundredths[0]; }

EconConfig points_config(std::vector<TheoryPoint> pts, PriorMode prior) {
  EconConfig c;
  c.points = std::move(pts);
  c.prior = prior;
  return c;
}

TEST(Utility, ScalarReferences) {
  // Reference values evaluated by hand in double precision.
  EXPECT_DOUBLE_EQ(utility(kEv, {{50, 0, 50}}), 0.0);
  EXPECT_NEAR(utility(kEv, {{10, 20, 70}}), 6.0, 1e-12);
  EXPECT_NEAR(utility(kPt, {{50, 0, 50}}), -4.644226901164819, 1e-12);
  EXPECT_NEAR(utility(kPt, {{10, 20, 70}}), 3.247968460563222, 1e-12);
  EXPECT_NEAR(utility(kMvs, {{10, 20, 70}}), 2.7922085463344386, 1e-12);
  EXPECT_NEAR(utility({Theory::crra, {1.0}}, {{10, 20, 70}}), 3.210243131173711, 1e-12);
  EXPECT_NEAR(utility({Theory::crra, {0.9}}, {{10, 20, 70}}), 13.793301892526815, 1e-10);
}

TEST(Utility, ZeroProbabilityOutcomesAreSkipped) {
  // A certain zero has no weighted term at all.
  EXPECT_DOUBLE_EQ(utility(kPt, {{0, 100, 0}}), 0.0);
  EXPECT_DOUBLE_EQ(utility(kPt, {{0, 0, 100}}), std::pow(10.0, 0.9));
}

TEST(Utility, MvsDegenerateLotteryHasNoSkew) {
  EXPECT_DOUBLE_EQ(utility(kMvs, {{0, 100, 0}}), 0.0);
  EXPECT_DOUBLE_EQ(utility({Theory::mvs, {1.0, 5.0, 5.0}}, {{100, 0, 0}}), -10.0);
}

TEST(Utility, CrraNeedsPositiveWealth) {
  EXPECT_THROW(utility({Theory::crra, {1.0}}, {{10, 20, 70}}, 5.0), std::domain_error);
  EXPECT_THROW(utility({Theory::crra, {0.5}}, {{10, 20, 70}}, 10.0), std::domain_error);
  auto c = fixed_params_config();
  c.wealth_offset = 10.0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(ResponseLikelihood, Examples) {
  EXPECT_DOUBLE_EQ(response_likelihood(1.3, 1.3), 0.5);
  EXPECT_NEAR(response_likelihood(2.0, 0.0), 0.8807970779778823, 1e-15);
  for (double d : {-7.0, -1.0, 0.25, 3.0}) {
    EXPECT_NEAR(response_likelihood(d, 0.0) + response_likelihood(0.0, d), 1.0, 1e-15);
    EXPECT_NEAR(response_likelihood(d + 100.0, 100.0), response_likelihood(d, 0.0), 1e-12);
  }
}

TEST(Pool, Enumeration) {
  const auto lot = enumerate_lotteries();
  EXPECT_EQ(lot.size(), 69u);
  std::set<Lottery> distinct(lot.begin(), lot.end());
  EXPECT_EQ(distinct.size(), lot.size());
  EXPECT_TRUE(distinct.count({{1, 99, 0}}));
  EXPECT_FALSE(distinct.count({{1, 9, 90}}));
  for (const auto& l : lot) EXPECT_EQ(l.hundredths[0] + l.hundredths[1] + l.hundredths[2], 100);
  EXPECT_TRUE(std::is_sorted(lot.begin(), lot.end()));

  const auto tests = enumerate_tests();
  EXPECT_EQ(tests.size(), 69u * 68u / 2u);
  for (const auto& p : tests) EXPECT_TRUE(p.first < p.second);
  EXPECT_EQ(enumerate_tests({true, true}).size(), 69u * 68u);

  const auto strict = enumerate_lotteries(false);
  EXPECT_EQ(strict.size(), 36u);
  for (const auto& l : strict)
    for (int h : l.hundredths) EXPECT_GT(h, 0);
}

TEST(Pool, CsvExport) {
  std::ostringstream os;
  write_test_pool_csv(os, enumerate_tests());
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "pair_index,l1_p1,l1_p2,l1_p3,l2_p1,l2_p2,l2_p3");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0.00,0.01,0.99,0.00,0.10,0.90");
}

TEST(Config, Presets) {
  EXPECT_EQ(fixed_params_config().points.size(), 4u);
  const auto grid = param_grid_config();
  EXPECT_EQ(grid.points.size(), 58u);
  std::array<int, 4> count{};
  for (const auto& p : grid.points) ++count[static_cast<std::size_t>(p.theory)];
  EXPECT_EQ(count, (std::array<int, 4>{1, 27, 27, 3}));
}

TEST(Config, JsonRoundTrip) {
  const auto c = econ_config_from_json(nlohmann::json::parse(R"({
      "grids": {"EV": {}, "PT": {"rho": [0.9], "lambda": [2.0, 2.2], "alpha": [1.0]}},
      "prior": "uniform_points", "budget": 12, "criterion": "info_gain",
      "pool": {"admit_zero": false}})"));
  EXPECT_EQ(c.points.size(), 3u);
  EXPECT_EQ(c.prior, PriorMode::uniform_points);
  EXPECT_EQ(c.budget, 12);
  EXPECT_EQ(c.rule, Rule::info_gain);
  EXPECT_FALSE(c.pool.admit_zero);
  const auto back = econ_config_from_snapshot(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, Rejections) {
  using nlohmann::json;
  EXPECT_THROW(econ_config_from_json(json{{"budget", 0}}), ValidationError);
  EXPECT_THROW(econ_config_from_json(json{{"preset", "nope"}}), ValidationError);
  EXPECT_THROW(econ_config_from_json(json{{"criterion", "greedy"}}), ValidationError);
  EXPECT_THROW(econ_config_from_json(json{{"prior", "flat"}}), ValidationError);
  EXPECT_THROW(econ_config_from_json(json::parse(R"({"grids": {"XYZ": {}}})")), ValidationError);
  EXPECT_THROW(econ_config_from_json(json::parse(R"({"grids": {"PT": {"rho": [1]}}})")),
               ValidationError);
  EXPECT_THROW(econ_config_from_json(json::parse(R"({"grids": {}})")), ValidationError);
}

TEST(Prior, Modes) {
  const EconModel uniform_theories(param_grid_config());
  const auto m = theory_marginals(uniform_theories, uniform_theories.prior());
  for (double x : m) EXPECT_NEAR(x, 0.25, 1e-12);

  auto c = param_grid_config();
  c.prior = PriorMode::uniform_points;
  const EconModel uniform_points(c);
  const auto mp = theory_marginals(uniform_points, uniform_points.prior());
  EXPECT_NEAR(mp[0], 1.0 / 58, 1e-12);
  EXPECT_NEAR(mp[1], 27.0 / 58, 1e-12);
  EXPECT_NEAR(mp[2], 27.0 / 58, 1e-12);
  EXPECT_NEAR(mp[3], 3.0 / 58, 1e-12);
  EXPECT_EQ(map_theory(uniform_points, uniform_points.prior()), std::nullopt);
}

// Two points on one test: one prefers lottery 1 with probability 0.9, the
// other is indifferent.
TEST(BayesUpdate, TwoPointExample) {
  const EconModel model(points_config(
      {{Theory::mvs, {std::log(9.0), 0.0, 0.0}}, {Theory::mvs, {0.0, 0.0, 0.0}}},
      PriorMode::uniform_points));
  std::size_t test = model.num_tests();
  for (std::size_t t = 0; t < model.num_tests(); ++t)
    if (model.tests()[t].first == Lottery{{0, 90, 10}} &&
        model.tests()[t].second == Lottery{{10, 80, 10}})
      test = t;
  ASSERT_LT(test, model.num_tests());
  EXPECT_NEAR(model.p_first(0, test), 0.9, 1e-12);
  EXPECT_NEAR(model.p_first(1, test), 0.5, 1e-15);

  const auto post = bayes_update(model, model.prior(), test, 1);
  EXPECT_NEAR(post.weights[0], 9.0 / 14.0, 1e-12);
  EXPECT_NEAR(post.weights[1], 5.0 / 14.0, 1e-12);
  const auto other = bayes_update(model, model.prior(), test, 2);
  EXPECT_NEAR(other.weights[0], 1.0 / 6.0, 1e-12);

  EXPECT_THROW(bayes_update(model, model.prior(), test, 0), ValidationError);
  EXPECT_THROW(bayes_update(model, model.prior(), test, 3), ValidationError);
  EXPECT_THROW(bayes_update(model, model.prior(), model.num_tests(), 1), ValidationError);
}

TEST(BayesUpdate, IndifferentPointsLeaveThePosteriorAlone) {
  const EconModel model(points_config(
      {{Theory::mvs, {0.0, 0.0, 0.0}}, {Theory::mvs, {0.0, 0.0, 0.0}}, kEv},
      PriorMode::uniform_points));
  // Equal means: every point is indifferent.
  std::size_t test = 0;
  while (mean_tenths(model.tests()[test].first) != mean_tenths(model.tests()[test].second)) ++test;
  const auto prior = model.prior();
  const auto post = bayes_update(model, prior, test, 2);
  for (std::size_t j = 0; j < prior.weights.size(); ++j)
    EXPECT_NEAR(post.weights[j], prior.weights[j], 1e-15);
}

TEST(BayesUpdate, SumsToOneAndCommutes) {
  const EconModel model(param_grid_config());
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t a = rng.below(model.num_tests()), b = rng.below(model.num_tests());
    const int ca = 1 + static_cast<int>(rng.below(2)), cb = 1 + static_cast<int>(rng.below(2));
    const auto ab = bayes_update(model, bayes_update(model, model.prior(), a, ca), b, cb);
    const auto ba = bayes_update(model, bayes_update(model, model.prior(), b, cb), a, ca);
    double total = 0.0;
    for (std::size_t j = 0; j < ab.weights.size(); ++j) {
      EXPECT_NEAR(ab.weights[j], ba.weights[j], 1e-12);
      EXPECT_GE(ab.weights[j], 0.0);
      total += ab.weights[j];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Score, MatchesGenericObjectives) {
  const EconModel model(param_grid_config());
  Rng rng(5);
  auto post = model.prior();
  for (int step = 0; step < 6; ++step) {
    for (int k = 0; k < 40; ++k) {
      const std::size_t t = rng.below(model.num_tests());
      const auto table = choice_mass_table(model, post, t);
      EXPECT_NEAR(score(model, post, t, Rule::effecxtive), gini_gain(table), 1e-12);
      EXPECT_NEAR(score(model, post, t, Rule::info_gain), entropy_gain(table), 1e-12);
      EXPECT_NEAR(score(model, post, t, Rule::uncertainty), predictive_entropy(table), 1e-12);
      EXPECT_NEAR(score(model, post, t, Rule::version_space), mass_reduction(table), 1e-12);
      for (Rule r : {Rule::effecxtive, Rule::info_gain, Rule::uncertainty, Rule::version_space})
        EXPECT_GE(score(model, post, t, r), 0.0);
    }
    post = bayes_update(model, post, rng.below(model.num_tests()), 1 + static_cast<int>(rng.below(2)));
  }
  EXPECT_THROW(score(model, post, 0, Rule::random), ValidationError);
}

TEST(Select, FirstTestIsTheBruteForceArgmax) {
  const EconModel model(fixed_params_config());
  const auto prior = model.prior();
  std::size_t best = 0;
  double best_gain = -1.0;
  for (std::size_t t = 0; t < model.num_tests(); ++t) {
    const double g = gini_gain(choice_mass_table(model, prior, t));
    if (g > best_gain * (1.0 + 1e-12)) {
      best = t;
      best_gain = g;
    }
  }
  const std::vector<char> none(model.num_tests(), 0);
  EXPECT_EQ(select_test_eff(model, prior, none), std::optional<std::size_t>(best));
  EXPECT_GT(best_gain, 0.0);
}

TEST(Select, InformativeBeatsUninformativeAndTiesGoLow) {
  // EV and its mirror image disagree on any pair with different means and are
  // both indifferent when the means agree.
  const EconModel model(points_config({kEv, {Theory::mvs, {-1.0, 0.0, 0.0}}},
                                      PriorMode::uniform_theories));
  std::vector<std::size_t> flat, split;
  for (std::size_t t = 0; t < model.num_tests(); ++t)
    (mean_tenths(model.tests()[t].first) == mean_tenths(model.tests()[t].second) ? flat : split)
        .push_back(t);
  ASSERT_GE(flat.size(), 2u);
  ASSERT_FALSE(split.empty());

  const std::size_t lo = std::min(flat[0], split[0]), hi = std::max(flat[0], split[0]);
  std::vector<char> used(model.num_tests(), 1);
  used[lo] = used[hi] = 0;
  const auto prior = model.prior();
  EXPECT_NEAR(score(model, prior, flat[0], Rule::effecxtive), 0.0, 1e-15);
  EXPECT_GT(score(model, prior, split[0], Rule::effecxtive), 0.0);
  for (Rule r : {Rule::effecxtive, Rule::info_gain})
    EXPECT_EQ(select_test(model, prior, used, r), std::optional<std::size_t>(split[0]));

  std::fill(used.begin(), used.end(), 1);
  used[flat[1]] = used[flat[0]] = 0;
  EXPECT_EQ(select_test_eff(model, prior, used), std::optional<std::size_t>(flat[0]));

  std::fill(used.begin(), used.end(), 1);
  EXPECT_EQ(select_test_eff(model, prior, used), std::nullopt);
}

TEST(Select, RandomRule) {
  const EconModel model(fixed_params_config());
  std::vector<char> used(model.num_tests(), 0);
  EXPECT_THROW(select_test(model, model.prior(), used, Rule::random), ValidationError);
  Rng a(3), b(3);
  for (int i = 0; i < 10; ++i) {
    const auto x = select_test(model, model.prior(), used, Rule::random, &a);
    EXPECT_EQ(x, select_test(model, model.prior(), used, Rule::random, &b));
    ASSERT_TRUE(x);
    EXPECT_FALSE(used[*x]);
    used[*x] = 1;
  }
}

TEST(Names, RoundTrip) {
  for (Rule r : kAllRules) EXPECT_EQ(parse_rule(to_string(r)), r);
  for (Theory t : kTheories) EXPECT_EQ(parse_theory(to_string(t)), t);
  EXPECT_EQ(parse_rule("eff"), Rule::effecxtive);
  EXPECT_THROW(parse_rule("best"), ValidationError);
}

TEST(PairJson, Shape) {
  const EconModel model(fixed_params_config());
  const auto j = pair_json(model, 0);
  EXPECT_EQ(j.at("pair_index"), 0);
  EXPECT_EQ(j.at("lottery1").at("payoffs"), (nlohmann::json{-10, 0, 10}));
  EXPECT_EQ(j.at("lottery1").at("probs"), (nlohmann::json{0.0, 0.01, 0.99}));
  EXPECT_THROW(pair_json(model, model.num_tests()), std::out_of_range);
}

}  // namespace
}  // namespace ecd::econ
