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

#include "ecd/adversarial.hpp"
#include "ecd/core.hpp"

namespace ecd {
namespace {

EcdInstance gbs_bad4() { return gen_gbs_bad({4}); }

TEST(NormalizePrior, Examples) {
  const std::vector<double> a{2, 2};
  EXPECT_EQ(normalize_prior(a).weights, (std::vector<double>{0.5, 0.5}));
  const std::vector<double> b{1, 1, 2};
  EXPECT_EQ(normalize_prior(b).weights, (std::vector<double>{0.25, 0.25, 0.5}));
}

TEST(NormalizePrior, RejectsDegenerate) {
  const std::vector<double> zeros{0, 0};
  EXPECT_THROW(normalize_prior(zeros), ValidationError);
  const std::vector<double> negative{1, -1, 2};
  EXPECT_THROW(normalize_prior(negative), ValidationError);
  try {
    normalize_prior(zeros);
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "degenerate prior");
  }
}

TEST(KosarajuPrior, LiftsSmallMasses) {
  const Prior uniform = normalize_prior(std::vector<double>{1, 1, 1, 1});
  EXPECT_EQ(kosaraju_prior(uniform, 4).weights, uniform.weights);
  EXPECT_TRUE(kosaraju_prior(uniform, 4).kosaraju_modified);

  const Prior skewed{{0.97, 0.01, 0.01, 0.01}, false};
  const auto lifted = kosaraju_prior(skewed, 4).weights;
  const double total = 0.97 + 3 * 0.0625;
  EXPECT_NEAR(lifted[0], 0.97 / total, 1e-15);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(lifted[i], 0.0625 / total, 1e-15);

  const Prior half{{0.5, 0.5}, false};
  EXPECT_EQ(kosaraju_prior(half, 2).weights, half.weights);
}

TEST(EcdInstance, RejectsInvalidTables) {
  const Prior p = normalize_prior(std::vector<double>{1, 1});
  EXPECT_THROW(EcdInstance({"a", "b"}, p, {"t"}, {1.0}, {{0}, {0}}, {{0}, {1}}),
               ValidationError);  // identical rows
  EXPECT_THROW(EcdInstance({"a", "b"}, p, {"t"}, {0.0}, {{0}, {1}}, {{0}, {1}}),
               ValidationError);  // zero cost
  EXPECT_THROW(EcdInstance({"a", "b"}, p, {"t"}, {1.0}, {{0}, {1}}, {{0}}),
               ValidationError);  // uncovered hypothesis
  EXPECT_THROW(EcdInstance({"a", "b"}, p, {"t"}, {1.0}, {{0}, {1}}, {{0, 1}, {1}}),
               ValidationError);  // overlapping classes
  EXPECT_THROW(EcdInstance({"a", "b"}, Prior{{0.7, 0.7}, false}, {"t"}, {1.0}, {{0}, {1}},
                           {{0}, {1}}),
               ValidationError);  // prior does not sum to 1
  EXPECT_NO_THROW(EcdInstance({"a", "b"}, p, {"t"}, {1.0}, {{0}, {1}}, {{0, 1}}));
}

TEST(VersionSpace, Examples) {
  const auto inst = gbs_bad4();
  const auto all = version_space(inst, {});
  EXPECT_EQ(all.members, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_DOUBLE_EQ(all.mass, 1.0);

  const auto one = version_space(inst, PartialRealization({{0, 1}}));
  EXPECT_EQ(one.members, (std::vector<std::size_t>{0}));
  EXPECT_DOUBLE_EQ(one.mass, 0.25);

  const auto rest = version_space(inst, PartialRealization({{0, 0}}));
  EXPECT_EQ(rest.members, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_DOUBLE_EQ(rest.mass, 0.75);
}

TEST(VersionSpace, InconsistentPartialThrows) {
  const auto inst = gbs_bad4();
  // h_i(t) = 1{i = t}: two ones cannot both hold.
  EXPECT_THROW(version_space(inst, PartialRealization({{0, 1}, {1, 1}})), ValidationError);
  PartialRealization x;
  x.observe(0, 0);
  EXPECT_THROW(x.observe(0, 1), ValidationError);
}

TEST(Posterior, Examples) {
  const auto inst = gbs_bad4();
  EXPECT_EQ(posterior(inst, PartialRealization{}), (std::vector<double>(4, 0.25)));
  const auto p = posterior(inst, PartialRealization({{0, 0}}));
  EXPECT_DOUBLE_EQ(p[0], 0.0);
  for (int i = 1; i < 4; ++i) EXPECT_DOUBLE_EQ(p[i], 1.0 / 3.0);

  const auto skewed = inst.with_prior(Prior{{0.4, 0.3, 0.2, 0.1}, false});
  const auto q = posterior(skewed, PartialRealization({{0, 0}}));
  EXPECT_DOUBLE_EQ(q[0], 0.0);
  EXPECT_NEAR(q[1], 0.5, 1e-15);
  EXPECT_NEAR(q[2], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(q[3], 1.0 / 6.0, 1e-15);
}

TEST(ClassPosterior, Examples) {
  const auto inst = gbs_bad4();
  EXPECT_EQ(class_posterior(inst, PartialRealization{}), (std::vector<double>{0.75, 0.25}));
  EXPECT_EQ(class_posterior(inst, PartialRealization({{3, 0}})), (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(class_posterior(inst, PartialRealization({{3, 1}})), (std::vector<double>{0.0, 1.0}));
}

TEST(IsTerminal, Examples) {
  const auto inst = gbs_bad4();
  const PartialRealization last_zero({{3, 0}});
  EXPECT_TRUE(is_terminal(inst, last_zero, Mode::ecd));
  EXPECT_FALSE(is_terminal(inst, last_zero, Mode::odt));
  const PartialRealization single({{1, 1}});
  EXPECT_TRUE(is_terminal(inst, single, Mode::ecd));
  EXPECT_TRUE(is_terminal(inst, single, Mode::odt));
  EXPECT_FALSE(is_terminal(inst, PartialRealization{}, Mode::ecd));
}

// Posterior restricted to V equals the prior renormalized over V, and V
// shrinks as observations are added.
TEST(VersionSpace, RandomizedIdentities) {
  Rng rng(11);
  for (int draw = 0; draw < 100; ++draw) {
    const auto inst = gen_random_ecd({6, 5, 3, 2, 3, 64, true}, rng);
    const std::size_t truth = rng.below(inst.num_hypotheses());
    PartialRealization x;
    VersionSpace prev = version_space(inst, x);
    std::vector<std::size_t> order(inst.num_tests());
    for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t t : order) {
      x.observe(t, inst.outcome(truth, t));
      const VersionSpace vs = version_space(inst, x);
      for (std::size_t h : vs.members) EXPECT_TRUE(prev.contains(h));
      const auto post = posterior(inst, vs);
      double mass = 0.0;
      for (std::size_t h : vs.members) mass += inst.prior(h);
      for (std::size_t h = 0; h < inst.num_hypotheses(); ++h) {
        const double expected = vs.contains(h) ? inst.prior(h) / mass : 0.0;
        EXPECT_NEAR(post[h], expected, 1e-12);
      }
      prev = vs;
    }
  }
}

}  // namespace
}  // namespace ecd
