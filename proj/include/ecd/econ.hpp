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

// Decision-under-risk domain: three-outcome lotteries, four utility theories,
// softmax choice likelihoods, the lottery-pair test pool, and exact Bayesian
// inference over a finite grid of (theory, parameter) points.
//
// Probabilities are stored in hundredths so that lottery identity and the
// pool order are exact. Choices are 1 or 2, matching the subject's view.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecd/core.hpp"
#include "ecd/objectives.hpp"
#include "ecd/rng.hpp"
#include "json.hpp"

namespace ecd::econ {

inline constexpr std::array<int, 3> kPayoffs{-10, 0, 10};

struct Lottery {
  std::array<int, 3> hundredths{};

  double prob(std::size_t i) const { return hundredths[i] / 100.0; }
  auto operator<=>(const Lottery&) const = default;
};

struct LotteryPair {
  Lottery first;
  Lottery second;
};

enum class Theory { ev, pt, mvs, crra };
inline constexpr std::array<Theory, 4> kTheories{Theory::ev, Theory::pt, Theory::mvs,
                                                 Theory::crra};

inline const char* to_string(Theory t) {
  switch (t) {
    case Theory::ev: return "EV";
    case Theory::pt: return "PT";
    case Theory::mvs: return "MVS";
    case Theory::crra: return "CRRA";
  }
  return "?";
}

inline Theory parse_theory(const std::string& s) {
  for (Theory t : kTheories)
    if (s == to_string(t)) return t;
  throw ValidationError("unknown theory '" + s + "'");
}

inline std::vector<std::string> parameter_names(Theory t) {
  switch (t) {
    case Theory::ev: return {};
    case Theory::pt: return {"rho", "lambda", "alpha"};
    case Theory::mvs: return {"w_mu", "w_sigma", "w_nu"};
    case Theory::crra: return {"a"};
  }
  return {};
}

struct TheoryPoint {
  Theory theory = Theory::ev;
  std::vector<double> params;

  std::string label() const {
    std::ostringstream os;
    os << to_string(theory);
    const auto names = parameter_names(theory);
    if (!names.empty()) {
      os << '(';
      for (std::size_t i = 0; i < names.size(); ++i)
        os << (i ? "," : "") << names[i] << '=' << params[i];
      os << ')';
    }
    return os.str();
  }
};

inline double utility(const TheoryPoint& point, const Lottery& lottery,
                      double wealth_offset = 20.0) {
  const auto& th = point.params;
  switch (point.theory) {
    case Theory::ev: {
      double u = 0.0;
      for (std::size_t i = 0; i < 3; ++i) u += lottery.prob(i) * kPayoffs[i];
      return u;
    }
    case Theory::pt: {
      const double rho = th[0], lambda = th[1], alpha = th[2];
      double u = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        const double p = lottery.prob(i);
        if (p <= 0.0) continue;
        const double l = kPayoffs[i];
        const double f = l >= 0 ? std::pow(l, rho) : -lambda * std::pow(-l, rho);
        u += f * std::exp(-std::pow(std::log(1.0 / p), alpha));
      }
      return u;
    }
    case Theory::mvs: {
      double mu = 0.0;
      for (std::size_t i = 0; i < 3; ++i) mu += lottery.prob(i) * kPayoffs[i];
      double var = 0.0, third = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        const double d = kPayoffs[i] - mu;
        var += lottery.prob(i) * d * d;
        third += lottery.prob(i) * d * d * d;
      }
      const double sigma = std::sqrt(var);
      const double nu = sigma > 0.0 ? third / (sigma * sigma * sigma) : 0.0;
      return th[0] * mu - th[1] * sigma + th[2] * nu;
    }
    case Theory::crra: {
      const double a = th[0];
      double u = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        const double w = wealth_offset + kPayoffs[i];
        if (!(w > 0.0))
          throw std::domain_error("CRRA utility needs positive shifted wealth, got " +
                                  std::to_string(w));
        u += lottery.prob(i) * (a == 1.0 ? std::log(w) : std::pow(w, 1.0 - a) / (1.0 - a));
      }
      return u;
    }
  }
  return 0.0;
}

// Probability that a subject with utilities (u1, u2) picks lottery 1.
inline double response_likelihood(double u1, double u2) { return 1.0 / (1.0 + std::exp(u2 - u1)); }

struct PoolOptions {
  bool ordered = false;
  bool admit_zero = true;
};

// Probability triples over the grid {0?, 1, 10, ..., 90, 99} (hundredths)
// summing to 100, in lexicographic order.
inline std::vector<Lottery> enumerate_lotteries(bool admit_zero = true) {
  std::vector<int> grid;
  if (admit_zero) grid.push_back(0);
  grid.push_back(1);
  for (int v = 10; v <= 90; v += 10) grid.push_back(v);
  grid.push_back(99);
  std::vector<Lottery> out;
  for (int a : grid)
    for (int b : grid)
      for (int c : grid)
        if (a + b + c == 100) out.push_back({{a, b, c}});
  return out;
}

// Pairs of distinct lotteries: (i, j) with i < j, or every i != j when ordered.
inline std::vector<LotteryPair> enumerate_tests(const PoolOptions& opts = {}) {
  const auto lot = enumerate_lotteries(opts.admit_zero);
  std::vector<LotteryPair> out;
  for (std::size_t i = 0; i < lot.size(); ++i)
    for (std::size_t j = opts.ordered ? 0 : i + 1; j < lot.size(); ++j)
      if (i != j) out.push_back({lot[i], lot[j]});
  return out;
}

enum class PriorMode { uniform_theories, uniform_points };

enum class Rule { effecxtive, info_gain, uncertainty, version_space, random };
inline constexpr std::array<Rule, 5> kAllRules{Rule::effecxtive, Rule::info_gain,
                                               Rule::uncertainty, Rule::version_space,
                                               Rule::random};

inline const char* to_string(Rule r) {
  switch (r) {
    case Rule::effecxtive: return "effecxtive";
    case Rule::info_gain: return "info_gain";
    case Rule::uncertainty: return "uncertainty";
    case Rule::version_space: return "version_space";
    case Rule::random: return "random";
  }
  return "?";
}

inline Rule parse_rule(const std::string& s) {
  for (Rule r : kAllRules)
    if (s == to_string(r)) return r;
  if (s == "eff") return Rule::effecxtive;
  if (s == "ig") return Rule::info_gain;
  if (s == "us") return Rule::uncertainty;
  if (s == "vs") return Rule::version_space;
  throw ValidationError("unknown selection rule '" + s + "'");
}

inline const char* to_string(PriorMode m) {
  return m == PriorMode::uniform_theories ? "uniform_theories" : "uniform_points";
}

struct EconConfig {
  std::vector<TheoryPoint> points;
  PriorMode prior = PriorMode::uniform_theories;
  double wealth_offset = 20.0;
  PoolOptions pool;
  int budget = 30;
  Rule rule = Rule::effecxtive;

  void validate() const {
    if (points.empty()) throw ValidationError("econ config has no theory points");
    if (budget < 1) throw ValidationError("budget must be >= 1");
    for (const auto& p : points) {
      if (p.params.size() != parameter_names(p.theory).size())
        throw ValidationError("theory point " + p.label() + " has the wrong parameter count");
      for (double v : p.params)
        if (!std::isfinite(v)) throw ValidationError("non-finite parameter in " + p.label());
      if (p.theory == Theory::crra && !(wealth_offset + kPayoffs[0] > 0.0))
        throw ValidationError("wealth_offset must keep every CRRA payoff positive");
    }
  }
};

namespace detail {

inline void add_grid(std::vector<TheoryPoint>& out, Theory t,
                     const std::vector<std::vector<double>>& axes) {
  std::vector<double> cur(axes.size());
  auto rec = [&](auto&& self, std::size_t d) -> void {
    if (d == axes.size()) {
      out.push_back({t, cur});
      return;
    }
    for (double v : axes[d]) {
      cur[d] = v;
      self(self, d + 1);
    }
  };
  rec(rec, 0);
}

}  // namespace detail

// The four canonical models, one point each.
inline EconConfig fixed_params_config() {
  EconConfig c;
  c.points = {{Theory::ev, {}},
              {Theory::pt, {0.9, 2.2, 0.9}},
              {Theory::mvs, {0.8, 0.25, 0.25}},
              {Theory::crra, {1.0}}};
  return c;
}

// Three values per parameter: 1 + 27 + 27 + 3 points.
inline EconConfig param_grid_config() {
  EconConfig c;
  detail::add_grid(c.points, Theory::ev, {});
  detail::add_grid(c.points, Theory::pt, {{0.85, 0.9, 0.95}, {2.1, 2.2, 2.3}, {0.9, 0.95, 1.0}});
  detail::add_grid(c.points, Theory::mvs, {{0.8, 0.9, 1.0}, {0.2, 0.25, 0.3}, {0.2, 0.25, 0.3}});
  detail::add_grid(c.points, Theory::crra, {{0.9, 0.95, 1.0}});
  return c;
}

// JSON form:
//   {"preset": "fixed_params" | "param_grid",          (optional base)
//    "grids": {"PT": {"rho": [...], ...}, "EV": {}},   (replaces the points)
//    "prior": "uniform_theories" | "uniform_points",
//    "wealth_offset": 20, "budget": 30, "criterion": "effecxtive",
//    "pool": {"ordered": false, "admit_zero": true}}
inline EconConfig econ_config_from_json(const nlohmann::json& j) {
  EconConfig c;
  const std::string preset = j.value("preset", std::string("fixed_params"));
  if (preset == "fixed_params") c = fixed_params_config();
  else if (preset == "param_grid") c = param_grid_config();
  else throw ValidationError("unknown econ preset '" + preset + "'");

  if (j.contains("grids")) {
    c.points.clear();
    const auto& grids = j.at("grids");
    for (Theory t : kTheories) {
      if (!grids.contains(to_string(t))) continue;
      const auto& g = grids.at(to_string(t));
      std::vector<std::vector<double>> axes;
      for (const auto& name : parameter_names(t)) {
        if (!g.contains(name))
          throw ValidationError(std::string("grid for ") + to_string(t) + " lacks '" + name + "'");
        axes.push_back(g.at(name).get<std::vector<double>>());
        if (axes.back().empty())
          throw ValidationError(std::string("empty grid axis ") + to_string(t) + "." + name);
      }
      detail::add_grid(c.points, t, axes);
    }
    for (auto it = grids.begin(); it != grids.end(); ++it) parse_theory(it.key());
  }
  if (j.contains("prior")) {
    const auto p = j.at("prior").get<std::string>();
    if (p == "uniform_theories") c.prior = PriorMode::uniform_theories;
    else if (p == "uniform_points") c.prior = PriorMode::uniform_points;
    else throw ValidationError("unknown prior mode '" + p + "'");
  }
  c.wealth_offset = j.value("wealth_offset", c.wealth_offset);
  c.budget = j.value("budget", c.budget);
  if (j.contains("criterion")) c.rule = parse_rule(j.at("criterion").get<std::string>());
  if (j.contains("pool")) {
    c.pool.ordered = j.at("pool").value("ordered", c.pool.ordered);
    c.pool.admit_zero = j.at("pool").value("admit_zero", c.pool.admit_zero);
  }
  c.validate();
  return c;
}

inline nlohmann::json to_json(const EconConfig& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : c.points)
    pts.push_back({{"theory", to_string(p.theory)}, {"params", p.params}});
  return {{"points", pts},
          {"prior", to_string(c.prior)},
          {"wealth_offset", c.wealth_offset},
          {"budget", c.budget},
          {"criterion", to_string(c.rule)},
          {"pool", {{"ordered", c.pool.ordered}, {"admit_zero", c.pool.admit_zero}}}};
}

// Inverse of to_json(EconConfig): explicit points instead of grids.
inline EconConfig econ_config_from_snapshot(const nlohmann::json& j) {
  EconConfig c;
  for (const auto& p : j.at("points"))
    c.points.push_back({parse_theory(p.at("theory").get<std::string>()),
                        p.at("params").get<std::vector<double>>()});
  const auto prior = j.at("prior").get<std::string>();
  c.prior = prior == "uniform_points" ? PriorMode::uniform_points : PriorMode::uniform_theories;
  c.wealth_offset = j.at("wealth_offset").get<double>();
  c.budget = j.at("budget").get<int>();
  c.rule = parse_rule(j.at("criterion").get<std::string>());
  c.pool.ordered = j.at("pool").at("ordered").get<bool>();
  c.pool.admit_zero = j.at("pool").at("admit_zero").get<bool>();
  c.validate();
  return c;
}

struct GridPosterior {
  std::vector<double> weights;
};

// The test pool plus every P(choice = 1 | point, test), computed once.
// Immutable after construction and safe to share between threads.
class EconModel {
 public:
  explicit EconModel(EconConfig config) : config_(std::move(config)) {
    config_.validate();
    tests_ = enumerate_tests(config_.pool);
    const auto lotteries = enumerate_lotteries(config_.pool.admit_zero);
    const std::size_t n = config_.points.size();

    // Utilities cached per (point, lottery).
    std::map<Lottery, std::size_t> lottery_index;
    for (std::size_t l = 0; l < lotteries.size(); ++l) lottery_index[lotteries[l]] = l;
    std::vector<double> u(n * lotteries.size());
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < lotteries.size(); ++l)
        u[j * lotteries.size() + l] = utility(config_.points[j], lotteries[l], config_.wealth_offset);

    p_first_.resize(tests_.size() * n);
    for (std::size_t t = 0; t < tests_.size(); ++t) {
      const std::size_t a = lottery_index.at(tests_[t].first);
      const std::size_t b = lottery_index.at(tests_[t].second);
      for (std::size_t j = 0; j < n; ++j)
        p_first_[t * n + j] =
            response_likelihood(u[j * lotteries.size() + a], u[j * lotteries.size() + b]);
    }

    for (Theory th : kTheories) {
      bool present = false;
      for (const auto& p : config_.points) present |= p.theory == th;
      if (present) theories_.push_back(th);
    }
    for (const auto& p : config_.points) {
      std::size_t c = 0;
      while (theories_[c] != p.theory) ++c;
      class_of_.push_back(c);
    }
  }

  const EconConfig& config() const { return config_; }
  const std::vector<LotteryPair>& tests() const { return tests_; }
  std::size_t num_tests() const { return tests_.size(); }
  std::size_t num_points() const { return config_.points.size(); }
  const TheoryPoint& point(std::size_t j) const { return config_.points[j]; }
  // Theories that own at least one grid point, in canonical order.
  const std::vector<Theory>& theories() const { return theories_; }
  std::size_t class_of(std::size_t j) const { return class_of_[j]; }

  double p_first(std::size_t j, std::size_t test) const { return p_first_[test * num_points() + j]; }
  double likelihood(std::size_t j, std::size_t test, int choice) const {
    const double p = p_first(j, test);
    return choice == 1 ? p : 1.0 - p;
  }
  const double* p_first_row(std::size_t test) const { return &p_first_[test * num_points()]; }

  GridPosterior prior() const {
    const std::size_t n = num_points();
    GridPosterior g;
    if (config_.prior == PriorMode::uniform_points) {
      g.weights.assign(n, 1.0 / static_cast<double>(n));
      return g;
    }
    std::vector<std::size_t> count(theories_.size(), 0);
    for (std::size_t j = 0; j < n; ++j) ++count[class_of_[j]];
    for (std::size_t j = 0; j < n; ++j)
      g.weights.push_back(1.0 / (static_cast<double>(theories_.size()) *
                                 static_cast<double>(count[class_of_[j]])));
    return g;
  }

 private:
  EconConfig config_;
  std::vector<LotteryPair> tests_;
  std::vector<double> p_first_;  // test-major
  std::vector<Theory> theories_;
  std::vector<std::size_t> class_of_;
};

inline void check_choice(int choice) {
  if (choice != 1 && choice != 2)
    throw ValidationError("choice must be 1 or 2, got " + std::to_string(choice));
}

inline GridPosterior bayes_update(const EconModel& model, const GridPosterior& post,
                                  std::size_t test, int choice) {
  check_choice(choice);
  if (test >= model.num_tests()) throw ValidationError("unknown test index");
  GridPosterior out;
  out.weights.resize(post.weights.size());
  double total = 0.0;
  for (std::size_t j = 0; j < post.weights.size(); ++j) {
    out.weights[j] = post.weights[j] * model.likelihood(j, test, choice);
    total += out.weights[j];
  }
  if (!(total >= 1e-300)) throw std::runtime_error("posterior collapse");
  for (double& w : out.weights) w /= total;
  return out;
}

// Per-theory marginals indexed like kTheories (absent theories are 0).
inline std::array<double, 4> theory_marginals(const EconModel& model, const GridPosterior& post) {
  std::array<double, 4> m{};
  for (std::size_t j = 0; j < post.weights.size(); ++j)
    m[static_cast<std::size_t>(model.point(j).theory)] += post.weights[j];
  return m;
}

// The unique most probable theory, or nothing when the top is shared.
inline std::optional<Theory> map_theory(const EconModel& model, const GridPosterior& post) {
  const auto m = theory_marginals(model, post);
  std::size_t best = 0;
  for (std::size_t i = 1; i < 4; ++i)
    if (m[i] > m[best]) best = i;
  for (std::size_t i = 0; i < 4; ++i)
    if (i != best && std::abs(m[i] - m[best]) <= 1e-12 * m[best]) return std::nullopt;
  return kTheories[best];
}

// alpha(i, y): posterior mass of theory class i jointly with choice y.
inline OutcomeMassTable choice_mass_table(const EconModel& model, const GridPosterior& post,
                                          std::size_t test) {
  OutcomeMassTable t(model.theories().size(), 2);
  const double* p = model.p_first_row(test);
  for (std::size_t j = 0; j < post.weights.size(); ++j) {
    const double w = post.weights[j];
    t.add(model.class_of(j), 0, w * p[j]);
    t.add(model.class_of(j), 1, w * (1.0 - p[j]));
  }
  return t;
}

// Benefit of a test under a deterministic rule (random has no score). Same
// quantities as gini_gain / entropy_gain / predictive_entropy /
// mass_reduction on choice_mass_table(), without the allocations.
inline double score(const EconModel& model, const GridPosterior& post, std::size_t test,
                    Rule rule) {
  if (rule == Rule::random) throw ValidationError("random rule has no score");
  std::array<double, 8> a{};  // a[2c + y], y = 0 for choice 1
  const double* p = model.p_first_row(test);
  for (std::size_t j = 0; j < post.weights.size(); ++j) {
    const double w = post.weights[j];
    const std::size_t c = 2 * model.class_of(j);
    a[c] += w * p[j];
    a[c + 1] += w * (1.0 - p[j]);
  }
  const std::size_t k = model.theories().size();
  double m[2] = {0.0, 0.0};
  for (std::size_t c = 0; c < k; ++c) {
    m[0] += a[2 * c];
    m[1] += a[2 * c + 1];
  }
  const double total = m[0] + m[1];
  if (!(total > 0.0)) return 0.0;
  auto plogp = [](double x) { return x > 0.0 ? x * std::log2(x) : 0.0; };
  double gain = 0.0;
  switch (rule) {
    case Rule::effecxtive: {
      double before = 0.0, after = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double b = a[2 * c] + a[2 * c + 1];
        before += b * b;
      }
      before /= total * total;
      for (std::size_t y = 0; y < 2; ++y) {
        if (m[y] <= 0.0) continue;
        double sq = 0.0;
        for (std::size_t c = 0; c < k; ++c) sq += a[2 * c + y] * a[2 * c + y];
        after += sq / (m[y] * total);
      }
      gain = after - before;
      break;
    }
    case Rule::info_gain: {
      double before = 0.0, after = 0.0;
      for (std::size_t c = 0; c < k; ++c) before -= plogp((a[2 * c] + a[2 * c + 1]) / total);
      for (std::size_t y = 0; y < 2; ++y) {
        if (m[y] <= 0.0) continue;
        double h = 0.0;
        for (std::size_t c = 0; c < k; ++c) h -= plogp(a[2 * c + y] / m[y]);
        after += (m[y] / total) * h;
      }
      gain = before - after;
      break;
    }
    case Rule::uncertainty:
      gain = -plogp(m[0] / total) - plogp(m[1] / total);
      break;
    case Rule::version_space:
      gain = total - (m[0] * m[0] + m[1] * m[1]) / total;
      break;
    case Rule::random:
      break;
  }
  return gain < 0.0 ? 0.0 : gain;
}

// Next test among those not yet used; lowest index wins ties (relative 1e-12).
// The random rule draws uniformly from the unused tests with `rng`.
inline std::optional<std::size_t> select_test(const EconModel& model, const GridPosterior& post,
                                              const std::vector<char>& used, Rule rule,
                                              Rng* rng = nullptr) {
  std::vector<std::size_t> open;
  for (std::size_t t = 0; t < model.num_tests(); ++t)
    if (!used[t]) open.push_back(t);
  if (open.empty()) return std::nullopt;
  if (rule == Rule::random) {
    if (!rng) throw ValidationError("random rule needs a random stream");
    return open[rng->below(open.size())];
  }
  std::size_t best = open.front();
  double best_score = -1.0;
  for (std::size_t t : open) {
    const double s = score(model, post, t, rule);
    if (s > best_score && !(std::abs(s - best_score) <= 1e-12 * std::abs(best_score))) {
      best = t;
      best_score = s;
    }
  }
  return best;
}

inline std::optional<std::size_t> select_test_eff(const EconModel& model,
                                                  const GridPosterior& post,
                                                  const std::vector<char>& used) {
  return select_test(model, post, used, Rule::effecxtive);
}

inline nlohmann::json pair_json(const EconModel& model, std::size_t index) {
  auto lot = [](const Lottery& l) {
    return nlohmann::json{{"payoffs", kPayoffs},
                          {"probs", {l.prob(0), l.prob(1), l.prob(2)}}};
  };
  const auto& p = model.tests().at(index);
  return {{"pair_index", index}, {"lottery1", lot(p.first)}, {"lottery2", lot(p.second)}};
}

// CSV: pair_index followed by the six probabilities.
inline void write_test_pool_csv(std::ostream& os, const std::vector<LotteryPair>& tests) {
  auto cell = [](int h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%d.%02d", h / 100, h % 100);
    return std::string(buf);
  };
  os << "pair_index,l1_p1,l1_p2,l1_p3,l2_p1,l2_p2,l2_p3\n";
  for (std::size_t i = 0; i < tests.size(); ++i) {
    os << i;
    for (int h : tests[i].first.hundredths) os << ',' << cell(h);
    for (int h : tests[i].second.hundredths) os << ',' << cell(h);
    os << '\n';
  }
}

}  // namespace ecd::econ
