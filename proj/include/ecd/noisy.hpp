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

// Noisy observation models and their reduction to equivalence class
// determination. Noise is an explicit finite variable theta whose value,
// together with the hypothesis, fixes the full outcome vector.

#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "ecd/core.hpp"

namespace ecd {

struct NoisyModel {
  std::vector<std::string> hypothesis_ids;
  std::vector<double> prior;                       // P(h)
  std::vector<std::string> noise_ids;              // supp(theta)
  std::vector<std::vector<double>> noise_given_h;  // [h][theta] -> P(theta | h)
  std::vector<std::string> test_ids;
  std::vector<double> costs;
  // [h][theta] -> outcome for every test.
  std::vector<std::vector<std::vector<Outcome>>> outcome_vectors;
  // Decisions and loss[d][h]. Empty means one decision per hypothesis under
  // 0-1 loss.
  std::vector<std::string> decision_ids;
  std::vector<std::vector<double>> loss;

  double joint(std::size_t h, std::size_t theta) const {
    return prior[h] * noise_given_h[h][theta];
  }

  std::size_t num_decisions() const {
    return decision_ids.empty() ? hypothesis_ids.size() : decision_ids.size();
  }

  double loss_of(std::size_t d, std::size_t h) const {
    if (decision_ids.empty()) return d == h ? 0.0 : 1.0;
    return loss[d][h];
  }

  void validate() const {
    const std::size_t n = hypothesis_ids.size();
    const std::size_t s = noise_ids.size();
    const std::size_t m = test_ids.size();
    if (n == 0 || s == 0) throw ValidationError("noisy model needs hypotheses and noise values");
    if (prior.size() != n || noise_given_h.size() != n || outcome_vectors.size() != n)
      throw ValidationError("noisy model tables disagree on hypothesis count");
    if (costs.size() != m) throw ValidationError("noisy model cost vector length mismatch");
    double total = 0.0;
    for (std::size_t h = 0; h < n; ++h) {
      if (noise_given_h[h].size() != s || outcome_vectors[h].size() != s)
        throw ValidationError("noisy model tables disagree on noise support size at hypothesis " +
                              std::to_string(h));
      for (std::size_t k = 0; k < s; ++k) {
        if (!(noise_given_h[h][k] >= 0.0))
          throw ValidationError("negative noise probability");
        if (outcome_vectors[h][k].size() != m)
          throw ValidationError("outcome vector for (" + std::to_string(h) + ", " +
                                std::to_string(k) + ") is not total over the tests");
        total += joint(h, k);
      }
    }
    if (std::abs(total - 1.0) > kPriorTolerance)
      throw ValidationError("P(h, theta) sums to " + std::to_string(total) + ", not 1");
    if (!decision_ids.empty()) {
      if (loss.size() != decision_ids.size())
        throw ValidationError("loss table needs one row per decision");
      for (const auto& row : loss)
        if (row.size() != n) throw ValidationError("loss row length must equal hypothesis count");
    }
  }
};

enum class ReductionMode { hypothesis, decision };

// Index of the risk-minimizing decision given joint masses P(h, x) for one
// full outcome vector x. Ties go to the lowest decision index.
inline std::size_t best_decision(const NoisyModel& model, const std::vector<double>& joint_h) {
  std::size_t best = 0;
  double best_risk = 0.0;
  for (std::size_t d = 0; d < model.num_decisions(); ++d) {
    double risk = 0.0;
    for (std::size_t h = 0; h < joint_h.size(); ++h) risk += joint_h[h] * model.loss_of(d, h);
    if (d == 0 || risk < best_risk - 1e-15) {
      best = d;
      best_risk = risk;
    }
  }
  return best;
}

inline EcdInstance reduce_noisy(const NoisyModel& model, ReductionMode mode) {
  model.validate();
  const std::size_t n = model.hypothesis_ids.size();
  const std::size_t s = model.noise_ids.size();

  struct Point {
    std::string id;
    double mass = 0.0;
    std::vector<double> joint_h;  // decision mode only
    std::size_t hypothesis = 0;
  };
  std::vector<Point> points;
  std::vector<std::vector<Outcome>> rows;
  std::map<std::vector<Outcome>, std::size_t> index;

  for (std::size_t h = 0; h < n; ++h) {
    for (std::size_t k = 0; k < s; ++k) {
      const double p = model.joint(h, k);
      if (p <= 0.0) continue;
      const auto& x = model.outcome_vectors[h][k];
      auto it = index.find(x);
      if (it != index.end()) {
        Point& prev = points[it->second];
        if (mode == ReductionMode::hypothesis)
          throw ValidationError("identifiability violated: " + prev.id + " and " +
                                model.hypothesis_ids[h] + "|" + model.noise_ids[k] +
                                " share an outcome vector");
        prev.mass += p;
        prev.joint_h[h] += p;
        continue;
      }
      index.emplace(x, points.size());
      Point pt;
      pt.id = model.hypothesis_ids[h] + "|" + model.noise_ids[k];
      pt.mass = p;
      pt.hypothesis = h;
      if (mode == ReductionMode::decision) {
        pt.joint_h.assign(n, 0.0);
        pt.joint_h[h] = p;
      }
      points.push_back(std::move(pt));
      rows.push_back(x);
    }
  }

  std::vector<std::string> ids;
  std::vector<double> weights;
  for (const auto& pt : points) {
    ids.push_back(pt.id);
    weights.push_back(pt.mass);
  }

  std::vector<std::vector<std::size_t>> blocks(mode == ReductionMode::hypothesis
                                                   ? n
                                                   : model.num_decisions());
  for (std::size_t r = 0; r < points.size(); ++r) {
    const std::size_t b = mode == ReductionMode::hypothesis
                              ? points[r].hypothesis
                              : best_decision(model, points[r].joint_h);
    blocks[b].push_back(r);
  }
  std::vector<std::vector<std::size_t>> classes;
  for (auto& b : blocks)
    if (!b.empty()) classes.push_back(std::move(b));

  return {std::move(ids), normalize_prior(weights), model.test_ids, model.costs,
          std::move(rows), std::move(classes)};
}

}  // namespace ecd
