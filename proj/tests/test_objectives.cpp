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
#include <functional>
#include <set>

#include "ecd/adversarial.hpp"
#include "ecd/objectives.hpp"

namespace ecd {
namespace {

const double kH34 = -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25));  // H(3/4, 1/4)

EcdInstance gbs_bad4() { return gen_gbs_bad({4}); }

// Two hypotheses in one class plus a test that every hypothesis answers the
// same way.
EcdInstance single_class() {
  return {{"a", "b", "c"}, normalize_prior(std::vector<double>{1, 1, 2}), {"t1", "t2"},
          {1.0, 1.0}, {{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}};
}

// Visits every partial realization reachable under some truth (observation
// order fixed to ascending test index).
void for_each_reachable(const EcdInstance& inst,
                        const std::function<void(const PartialRealization&)>& visit) {
  std::set<std::vector<Observation>> seen;
  const std::size_t m = inst.num_tests();
  for (std::size_t h = 0; h < inst.num_hypotheses(); ++h) {
    for (std::uint32_t b = 0; b < (1U << m); ++b) {
      PartialRealization x;
      for (std::size_t t = 0; t < m; ++t)
        if (b >> t & 1U) x.observe(t, inst.outcome(h, t));
      if (seen.insert(x.observations()).second) visit(x);
    }
  }
}

TEST(FEc, Examples) {
  const auto inst = gbs_bad4();
  for (std::size_t h = 0; h < 4; ++h) EXPECT_EQ(f_ec(inst, {}, h), 0.0);
  const auto one = single_class();
  EXPECT_EQ(f_ec(one, {0, 1}, 2), 0.0);
  EXPECT_DOUBLE_EQ(f_ec(inst, {3}, 3), 3.0 / 16.0);
}

TEST(DeltaEc, GbsBadExamples) {
  const auto inst = gbs_bad4();
  const PartialRealization empty;
  EXPECT_DOUBLE_EQ(delta_ec_naive({inst, empty, 3}), 0.1875);
  EXPECT_DOUBLE_EQ(delta_ec_naive({inst, empty, 0}), 0.09375);
  EXPECT_DOUBLE_EQ(delta_ec_fast({inst, empty, 3}), 0.1875);
  EXPECT_DOUBLE_EQ(delta_ec_fast({inst, empty, 0}), 0.09375);
  const PartialRealization settled({{3, 0}});
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(delta_ec_naive({inst, settled, t}), 0.0);
    EXPECT_EQ(delta_ec_fast({inst, settled, t}), 0.0);
  }
}

TEST(DeltaEc, RejectsObservedTest) {
  const auto inst = gbs_bad4();
  const PartialRealization x({{0, 0}});
  EXPECT_THROW(delta_ec_fast({inst, x, 0}), ValidationError);
}

TEST(DeltaEc, ConstantOutcomeTestIsZero) {
  const auto inst = gen_posterior_bad({2, 1});
  const std::size_t dummy = PosteriorBadLayout{2}.dummy_test(1);
  EXPECT_EQ(delta_ec_fast({inst, PartialRealization{}, dummy}), 0.0);
  EXPECT_EQ(delta_ec_naive({inst, PartialRealization{}, dummy}), 0.0);
}

TEST(DeltaEc, FastMatchesNaiveExhaustively) {
  Rng rng(2024);
  for (int draw = 0; draw < 20; ++draw) {
    const auto inst = gen_random_ecd({6, 5, 3, 2, 4, 64, true}, rng);
    for_each_reachable(inst, [&](const PartialRealization& x) {
      const VersionSpace vs = version_space(inst, x);
      for (std::size_t t = 0; t < inst.num_tests(); ++t) {
        if (x.contains(t)) continue;
        EXPECT_NEAR(delta_ec_fast(inst, vs, t), delta_ec_naive(inst, vs, t), 1e-12);
      }
    });
  }
}

TEST(EdgeWeight, PairwiseEqualsClassMassForm) {
  Rng rng(3);
  for (int draw = 0; draw < 100; ++draw) {
    const auto inst = gen_random_ecd({6, 4, 2, 1, 6, 64, true}, rng);
    double sq = 0.0;
    for (std::size_t i = 0; i < inst.num_classes(); ++i) {
      double m = 0.0;
      for (std::size_t h : inst.class_members(i)) m += inst.prior(h);
      sq += m * m;
    }
    EXPECT_NEAR(total_edge_weight(inst), 0.5 * (1.0 - sq), 1e-12);
  }
}

TEST(DeltaGbs, Examples) {
  const auto inst = gbs_bad4();
  for (std::size_t t = 0; t < 4; ++t)
    EXPECT_DOUBLE_EQ(delta_gbs({inst, PartialRealization{}, t}), 0.375);
  const auto one = single_class();
  EXPECT_EQ(delta_gbs({one, PartialRealization{}, 1}), 0.0);
  EXPECT_EQ(delta_gbs({inst, PartialRealization({{2, 1}}), 0}), 0.0);
}

TEST(DeltaIg, Examples) {
  const auto bad = gen_posterior_bad({3, 0});
  EXPECT_NEAR(delta_ig({bad, PartialRealization{}, 0}, Level::cls), 0.0, 1e-15);

  const EcdInstance two({"a", "b"}, normalize_prior(std::vector<double>{1, 1}), {"t"}, {1.0},
                        {{0}, {1}}, {{0}, {1}});
  EXPECT_DOUBLE_EQ(delta_ig({two, PartialRealization{}, 0}, Level::hypothesis), 1.0);

  const auto inst = gbs_bad4();
  EXPECT_NEAR(delta_ig({inst, PartialRealization{}, 3}, Level::cls), kH34, 1e-15);
}

TEST(DeltaUs, Examples) {
  const EcdInstance two({"a", "b"}, normalize_prior(std::vector<double>{1, 1}), {"t"}, {1.0},
                        {{0}, {1}}, {{0, 1}});
  EXPECT_DOUBLE_EQ(delta_us({two, PartialRealization{}, 0}), 1.0);
  EXPECT_EQ(delta_us({single_class(), PartialRealization{}, 1}), 0.0);
  EXPECT_NEAR(delta_us({gbs_bad4(), PartialRealization{}, 0}), kH34, 1e-15);
}

TEST(DeltaVoi, Examples) {
  const auto inst = gbs_bad4();
  EXPECT_DOUBLE_EQ(delta_voi({inst, PartialRealization{}, 3}), 0.25);
  EXPECT_NEAR(delta_voi({inst, PartialRealization{}, 0}), 0.0, 1e-15);
  const PartialRealization certain({{3, 0}});
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(delta_voi({inst, certain, t}), 0.0);
}

TEST(DeltaVoi, ExplicitLossMatchesClassShortcut) {
  Rng rng(8);
  for (int draw = 0; draw < 30; ++draw) {
    const auto inst = gen_random_ecd({6, 4, 3, 2, 3, 64, true}, rng);
    const LossTable loss = LossTable::zero_one_classes(inst);
    for_each_reachable(inst, [&](const PartialRealization& x) {
      const VersionSpace vs = version_space(inst, x);
      for (std::size_t t = 0; t < inst.num_tests(); ++t)
        if (!x.contains(t)) {
          EXPECT_NEAR(delta_voi(inst, vs, t, loss), delta_voi(inst, vs, t, LossTable{}), 1e-12);
        }
    });
  }
}

TEST(DeltaEff, Examples) {
  const auto inst = gbs_bad4();
  EXPECT_DOUBLE_EQ(delta_eff({inst, PartialRealization{}, 3}), 0.375);
  EXPECT_EQ(delta_eff({single_class(), PartialRealization{}, 1}), 0.0);
  EXPECT_EQ(delta_eff({single_class(), PartialRealization{}, 0}), 0.0);
}

TEST(FGbs, Examples) {
  const auto inst = gbs_bad4();
  EXPECT_DOUBLE_EQ(f_gbs(inst, {}, 2), 0.25);
  EXPECT_DOUBLE_EQ(f_gbs(inst, {0, 1, 2, 3}, 2), 1.0);
  EXPECT_DOUBLE_EQ(f_gbs(inst, {0}, 2), 0.5);
}

TEST(Objectives, NonNegativeAndZeroOnTerminal) {
  Rng rng(17);
  for (int draw = 0; draw < 40; ++draw) {
    const auto inst = gen_random_ecd({6, 5, 3, 2, 3, 64, true}, rng);
    for_each_reachable(inst, [&](const PartialRealization& x) {
      const VersionSpace vs = version_space(inst, x);
      const bool terminal = is_terminal(inst, vs, Mode::ecd);
      for (std::size_t t = 0; t < inst.num_tests(); ++t) {
        if (x.contains(t)) continue;
        EXPECT_GE(delta_ig(inst, vs, t, Level::cls), 0.0);
        EXPECT_GE(delta_ig(inst, vs, t, Level::hypothesis), 0.0);
        EXPECT_GE(delta_eff(inst, vs, t), 0.0);
        EXPECT_GE(delta_gbs(inst, vs, t), 0.0);
        if (terminal) {
          EXPECT_EQ(delta_ec_fast(inst, vs, t), 0.0);
          EXPECT_EQ(delta_ec_naive(inst, vs, t), 0.0);
          EXPECT_EQ(delta_eff(inst, vs, t), 0.0);
        }
      }
    });
  }
}

// With binary deterministic outcomes both benefits are increasing in
// P(y)(1 - P(y)), so they rank tests identically.
TEST(Objectives, GbsAndHypothesisIgShareArgmaxOnBinaryOdt) {
  Rng rng(99);
  auto argmax_set = [](const std::vector<double>& v) {
    double best = 0.0;
    for (double x : v) best = std::max(best, x);
    std::set<std::size_t> s;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (std::abs(v[i] - best) <= 1e-12) s.insert(i);
    return s;
  };
  for (int draw = 0; draw < 40; ++draw) {
    const auto inst = gen_random_ecd({6, 5, 2, 1, 6, 64, true}, rng).with_singleton_classes();
    for_each_reachable(inst, [&](const PartialRealization& x) {
      const VersionSpace vs = version_space(inst, x);
      std::vector<double> gbs(inst.num_tests(), -1.0), ig(inst.num_tests(), -1.0);
      for (std::size_t t = 0; t < inst.num_tests(); ++t) {
        if (x.contains(t)) continue;
        gbs[t] = delta_gbs(inst, vs, t);
        ig[t] = delta_ig(inst, vs, t, Level::hypothesis);
      }
      EXPECT_EQ(argmax_set(gbs), argmax_set(ig));
    });
  }
}

}  // namespace
}  // namespace ecd
