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

// Simulation drivers: accuracy curves for the econ domain and expected-cost
// tables for the synthetic instance families.
//
// Random draws for replicate r come from named substreams of the master seed:
// the true point from ("truth", r), the answer to test t from
// ("response", r, t), and the random policy's choices from ("policy", r,
// name). Every policy therefore faces the same subject, and a given test is
// answered the same way whichever policy asks it.

#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <exception>
#include <algorithm>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ecd/adversarial.hpp"
#include "ecd/econ.hpp"
#include "ecd/oracle.hpp"
#include "ecd/policies.hpp"
#include "json.hpp"

namespace ecd::harness {

enum class Scenario { fixed_params, param_grid, gbs_bad, posterior_bad, random_ecd };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::fixed_params: return "fixed_params";
    case Scenario::param_grid: return "param_grid";
    case Scenario::gbs_bad: return "gbs_bad";
    case Scenario::posterior_bad: return "posterior_bad";
    case Scenario::random_ecd: return "random_ecd";
  }
  return "?";
}

inline Scenario parse_scenario(const std::string& s) {
  for (Scenario x : {Scenario::fixed_params, Scenario::param_grid, Scenario::gbs_bad,
                     Scenario::posterior_bad, Scenario::random_ecd})
    if (s == to_string(x)) return x;
  throw ValidationError("unknown scenario '" + s + "'");
}

inline Criterion require_criterion(const std::string& name) {
  const auto c = parse_criterion(name);
  if (!c) throw ValidationError("unknown criterion '" + name + "'");
  return *c;
}

inline bool is_econ(Scenario s) { return s == Scenario::fixed_params || s == Scenario::param_grid; }

// accuracy(better) - accuracy(worse) at step k must reach min_gap_se pooled
// standard errors.
struct Assertion {
  std::string better;
  std::string worse;
  int k = 30;
  double min_gap_se = 3.0;
};

struct SimConfig {
  Scenario scenario = Scenario::fixed_params;
  std::vector<std::string> policies;
  std::size_t replicates = 1000;
  int budget = 30;
  std::uint64_t seed = 0;
  nlohmann::json econ = nlohmann::json::object();  // econ config overrides
  std::vector<std::size_t> sizes;                   // n for gbs_bad, q for posterior_bad
  std::size_t dummies = 0;
  RandomEcdParams random;
  bool check_properties = false;
  std::vector<Assertion> assertions;
  unsigned threads = 0;  // 0 = hardware concurrency

  void validate() const {
    if (replicates < 1) throw ValidationError("replicate count must be >= 1");
    if (budget < 1) throw ValidationError("budget must be >= 1");
    if (policies.empty()) throw ValidationError("no policies to compare");
  }
};

inline SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig c;
  c.scenario = parse_scenario(j.at("scenario").get<std::string>());
  if (j.contains("policies")) {
    c.policies = j.at("policies").get<std::vector<std::string>>();
  } else if (is_econ(c.scenario)) {
    for (auto r : econ::kAllRules) c.policies.push_back(econ::to_string(r));
  } else {
    for (auto r : kAllCriteria) c.policies.push_back(to_string(r));
  }
  c.replicates = j.value("replicates", c.replicates);
  c.budget = j.value("budget", c.budget);
  c.seed = j.value("seed", c.seed);
  if (j.contains("econ")) c.econ = j.at("econ");
  if (j.contains("sizes")) c.sizes = j.at("sizes").get<std::vector<std::size_t>>();
  c.dummies = j.value("dummies", c.dummies);
  if (j.contains("random")) {
    const auto& r = j.at("random");
    c.random.hypotheses = r.value("hypotheses", c.random.hypotheses);
    c.random.tests = r.value("tests", c.random.tests);
    c.random.outcomes = r.value("outcomes", c.random.outcomes);
    c.random.min_classes = r.value("min_classes", c.random.min_classes);
    c.random.max_classes = r.value("max_classes", c.random.max_classes);
    c.random.prior_denominator = r.value("prior_denominator", c.random.prior_denominator);
    c.random.unit_costs = r.value("unit_costs", c.random.unit_costs);
  }
  c.check_properties = j.value("check_properties", c.check_properties);
  for (const auto& a : j.value("assertions", nlohmann::json::array()))
    c.assertions.push_back({a.at("better").get<std::string>(), a.at("worse").get<std::string>(),
                            a.value("k", c.budget), a.value("min_gap_se", 3.0)});
  c.threads = j.value("threads", c.threads);
  for (const auto& p : c.policies) {
    if (is_econ(c.scenario)) econ::parse_rule(p);
    else require_criterion(p);
  }
  for (const auto& a : c.assertions) {
    if (a.k < 1 || a.k > c.budget) throw ValidationError("assertion step outside 1..budget");
    for (const auto& name : {a.better, a.worse})
      if (std::find(c.policies.begin(), c.policies.end(), name) == c.policies.end())
        throw ValidationError("assertion names unknown policy '" + name + "'");
  }
  c.validate();
  return c;
}

inline econ::EconConfig scenario_econ_config(const SimConfig& c) {
  nlohmann::json j = c.econ;
  if (!j.contains("preset"))
    j["preset"] = c.scenario == Scenario::param_grid ? "param_grid" : "fixed_params";
  j["budget"] = c.budget;
  return econ::econ_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Econ accuracy curves.

struct SubjectTrace {
  std::size_t truth = 0;  // grid point index
  std::vector<std::size_t> tests;
  std::vector<int> choices;
  std::vector<char> correct;  // MAP theory == true theory after each step
  econ::GridPosterior posterior;
};

// Uniform theory, then a uniform point within it.
inline std::size_t sample_truth(const econ::EconModel& model, std::uint64_t master,
                                std::size_t replicate) {
  Rng rng(derive_seed(master, {name_key("truth"), replicate}));
  const auto& th = model.theories();
  const std::size_t c = rng.below(th.size());
  std::vector<std::size_t> members;
  for (std::size_t j = 0; j < model.num_points(); ++j)
    if (model.class_of(j) == c) members.push_back(j);
  return members[rng.below(members.size())];
}

inline int simulated_choice(const econ::EconModel& model, std::size_t truth, std::size_t test,
                            std::uint64_t master, std::size_t replicate) {
  const double u = to_unit(derive_seed(master, {name_key("response"), replicate, test}));
  return u < model.p_first(truth, test) ? 1 : 2;
}

inline SubjectTrace simulate_subject(const econ::EconModel& model, std::size_t truth,
                                     econ::Rule rule, std::uint64_t master,
                                     std::size_t replicate, int budget) {
  SubjectTrace tr;
  tr.truth = truth;
  tr.posterior = model.prior();
  std::vector<char> used(model.num_tests(), 0);
  Rng policy_rng(derive_seed(master, {name_key("policy"), replicate,
                                      name_key(econ::to_string(rule))}));
  const econ::Theory true_theory = model.point(truth).theory;
  for (int k = 0; k < budget; ++k) {
    const auto t = econ::select_test(model, tr.posterior, used, rule, &policy_rng);
    if (!t) break;
    used[*t] = 1;
    const int y = simulated_choice(model, truth, *t, master, replicate);
    tr.posterior = econ::bayes_update(model, tr.posterior, *t, y);
    tr.tests.push_back(*t);
    tr.choices.push_back(y);
    tr.correct.push_back(econ::map_theory(model, tr.posterior) == true_theory);
  }
  return tr;
}

struct AccuracyCurve {
  std::string policy;
  std::vector<double> accuracy;  // index k-1
  std::vector<double> stderr_;
};

struct AssertionResult {
  Assertion assertion;
  double gap = 0.0;
  double pooled_se = 0.0;
  bool pass = false;
};

struct EconSimResult {
  std::vector<AccuracyCurve> curves;
  std::vector<AssertionResult> assertions;
  std::size_t replicates = 0;
  std::vector<std::size_t> truths;

  const AccuracyCurve& curve(const std::string& policy) const {
    for (const auto& c : curves)
      if (c.policy == policy) return c;
    throw ValidationError("no curve for policy '" + policy + "'");
  }
  bool all_pass() const {
    for (const auto& a : assertions)
      if (!a.pass) return false;
    return true;
  }
};

// Standard error of a difference of two accuracies, pooling both arms.
inline double pooled_se(double a, double b, std::size_t replicates) {
  const double p = 0.5 * (a + b);
  return std::sqrt(p * (1.0 - p) * 2.0 / static_cast<double>(replicates));
}

inline AssertionResult evaluate(const Assertion& a, const EconSimResult& r) {
  AssertionResult out{a};
  const double hi = r.curve(a.better).accuracy.at(static_cast<std::size_t>(a.k - 1));
  const double lo = r.curve(a.worse).accuracy.at(static_cast<std::size_t>(a.k - 1));
  out.gap = hi - lo;
  out.pooled_se = pooled_se(hi, lo, r.replicates);
  out.pass = out.gap > 0.0 && out.gap >= a.min_gap_se * out.pooled_se;
  return out;
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline EconSimResult simulate_econ(const econ::EconModel& model, const SimConfig& cfg) {
  cfg.validate();
  const std::size_t P = cfg.policies.size(), R = cfg.replicates;
  const auto K = static_cast<std::size_t>(cfg.budget);
  std::vector<econ::Rule> rules;
  for (const auto& p : cfg.policies) rules.push_back(econ::parse_rule(p));

  // hits[(r * P + p) * K + k]
  std::vector<char> hits(R * P * K, 0);
  std::vector<std::size_t> truths(R);
  parallel_for(R, cfg.threads, [&](std::size_t r) {
    truths[r] = sample_truth(model, cfg.seed, r);
    for (std::size_t p = 0; p < P; ++p) {
      const auto tr = simulate_subject(model, truths[r], rules[p], cfg.seed, r, cfg.budget);
      for (std::size_t k = 0; k < tr.correct.size(); ++k) hits[(r * P + p) * K + k] = tr.correct[k];
    }
  });

  EconSimResult out;
  out.replicates = R;
  out.truths = truths;
  for (std::size_t p = 0; p < P; ++p) {
    AccuracyCurve c{cfg.policies[p], std::vector<double>(K), std::vector<double>(K)};
    for (std::size_t k = 0; k < K; ++k) {
      std::size_t n = 0;
      for (std::size_t r = 0; r < R; ++r) n += static_cast<std::size_t>(hits[(r * P + p) * K + k]);
      const double a = static_cast<double>(n) / static_cast<double>(R);
      c.accuracy[k] = a;
      c.stderr_[k] = std::sqrt(a * (1.0 - a) / static_cast<double>(R));
    }
    out.curves.push_back(std::move(c));
  }
  for (const auto& a : cfg.assertions) out.assertions.push_back(evaluate(a, out));
  return out;
}

// ---------------------------------------------------------------------------
// Expected-cost tables.

struct RatioRow {
  std::string family;
  std::size_t size = 0;  // n, q, or instance number
  std::string policy;
  double expected_cost = 0.0;
  std::optional<double> opt;
  std::string note;

  std::optional<double> ratio() const {
    if (!opt) return std::nullopt;
    if (*opt == 0.0) return expected_cost == 0.0 ? std::optional<double>(1.0) : std::nullopt;
    return expected_cost / *opt;
  }
};

struct CostReport {
  std::vector<RatioRow> rows;
  // random_ecd only: EC2 cost within (2 ln(1/p_min) + 1) OPT, and checker results.
  std::size_t instances = 0;
  std::size_t bound_checked = 0;
  std::size_t bound_holds = 0;
  std::size_t submodularity_pass = 0;
  std::size_t monotonicity_pass = 0;
};

inline std::optional<double> try_opt(const EcdInstance& inst, std::string& note) {
  try {
    return optimal_expected_cost(inst).cost;
  } catch (const OracleTooLarge& e) {
    note = std::string("opt omitted: ") + e.what();
    return std::nullopt;
  }
}

inline void add_rows(CostReport& rep, const std::string& family, std::size_t size,
                     const EcdInstance& inst, const std::vector<std::string>& policies,
                     std::uint64_t seed) {
  std::string note;
  const auto opt = try_opt(inst, note);
  for (const auto& name : policies) {
    PolicySpec spec;
    spec.criterion = require_criterion(name);
    spec.seed = seed;
    rep.rows.push_back({family, size, name, expected_cost(spec, inst), opt, note});
  }
  if (family == "random_ecd" && opt) {
    PolicySpec ec2;
    ++rep.bound_checked;
    if (expected_cost(ec2, inst) <= (2.0 * std::log(1.0 / inst.min_prior()) + 1.0) * *opt + 1e-12)
      ++rep.bound_holds;
  }
}

inline CostReport cost_ratio_report(const SimConfig& cfg) {
  CostReport rep;
  switch (cfg.scenario) {
    case Scenario::gbs_bad:
      for (std::size_t n : cfg.sizes) add_rows(rep, "gbs_bad", n, gen_gbs_bad({n}), cfg.policies, cfg.seed);
      break;
    case Scenario::posterior_bad:
      for (std::size_t q : cfg.sizes) {
        add_rows(rep, "posterior_bad", q, gen_posterior_bad({q, cfg.dummies}), cfg.policies,
                 cfg.seed);
        // The fixed order (t0, t1..tq) as a reference policy.
        const auto inst = gen_posterior_bad({q, cfg.dummies});
        const auto order = PosteriorBadLayout{q}.reference_order();
        double c = 0.0;
        for (std::size_t h = 0; h < inst.num_hypotheses(); ++h)
          c += inst.prior(h) * run_sequence(inst, order, h).cost;
        RatioRow row = rep.rows.back();
        row.policy = "reference";
        row.expected_cost = c;
        rep.rows.push_back(row);
      }
      break;
    case Scenario::random_ecd: {
      Rng rng(derive_seed(cfg.seed, {name_key("instances")}));
      for (std::size_t i = 0; i < cfg.replicates; ++i) {
        const auto inst = gen_random_ecd(cfg.random, rng);
        add_rows(rep, "random_ecd", i, inst, cfg.policies, cfg.seed);
        ++rep.instances;
        if (cfg.check_properties) {
          rep.submodularity_pass += check_adaptive_submodularity(inst).pass;
          rep.monotonicity_pass += check_strong_monotonicity(inst).pass;
        }
      }
      break;
    }
    default:
      throw ValidationError("scenario has no cost report");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Output files.

inline std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline void write_curves_csv(std::ostream& os, const EconSimResult& r) {
  os << "policy,k,accuracy,stderr\n";
  for (const auto& c : r.curves)
    for (std::size_t k = 0; k < c.accuracy.size(); ++k)
      os << c.policy << ',' << k + 1 << ',' << fmt_double(c.accuracy[k]) << ','
         << fmt_double(c.stderr_[k]) << '\n';
}

inline void write_ratios_csv(std::ostream& os, const CostReport& rep) {
  os << "family,size,policy,expected_cost,opt,ratio,note\n";
  for (const auto& row : rep.rows) {
    const auto ratio = row.ratio();
    os << row.family << ',' << row.size << ',' << row.policy << ','
       << fmt_double(row.expected_cost) << ',' << (row.opt ? fmt_double(*row.opt) : "") << ','
       << (ratio ? fmt_double(*ratio) : "") << ',' << row.note << '\n';
  }
}

inline nlohmann::json summary_json(const SimConfig& cfg, const EconSimResult& r) {
  nlohmann::json pol = nlohmann::json::object();
  for (const auto& c : r.curves)
    pol[c.policy] = {{"final_accuracy", c.accuracy.back()}, {"final_stderr", c.stderr_.back()}};
  nlohmann::json asr = nlohmann::json::array();
  for (const auto& a : r.assertions)
    asr.push_back({{"better", a.assertion.better},
                   {"worse", a.assertion.worse},
                   {"k", a.assertion.k},
                   {"gap", a.gap},
                   {"pooled_se", a.pooled_se},
                   {"min_gap_se", a.assertion.min_gap_se},
                   {"pass", a.pass}});
  return {{"scenario", to_string(cfg.scenario)},
          {"replicates", cfg.replicates},
          {"budget", cfg.budget},
          {"seed", cfg.seed},
          {"policies", pol},
          {"assertions", asr},
          {"all_pass", r.all_pass()}};
}

inline nlohmann::json summary_json(const SimConfig& cfg, const CostReport& rep) {
  nlohmann::json j = {{"scenario", to_string(cfg.scenario)},
                      {"seed", cfg.seed},
                      {"rows", rep.rows.size()},
                      {"all_pass", true}};
  if (cfg.scenario == Scenario::random_ecd) {
    j["instances"] = rep.instances;
    j["bound_checked"] = rep.bound_checked;
    j["bound_holds"] = rep.bound_holds;
    j["all_pass"] = rep.bound_holds == rep.bound_checked;
    if (cfg.check_properties) {
      j["submodularity_pass"] = rep.submodularity_pass;
      j["monotonicity_pass"] = rep.monotonicity_pass;
      j["all_pass"] = j["all_pass"].get<bool>() && rep.submodularity_pass == rep.instances &&
                      rep.monotonicity_pass == rep.instances;
    }
  }
  return j;
}

// Runs the configured scenario and writes its files into `out_dir`. Returns
// false when an ordinal assertion or a bound check fails.
inline bool run_simulation(const SimConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto open = [&](const char* name) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
    return f;
  };
  nlohmann::json summary;
  if (is_econ(cfg.scenario)) {
    const econ::EconModel model(scenario_econ_config(cfg));
    const auto r = simulate_econ(model, cfg);
    auto curves = open("curves.csv");
    write_curves_csv(curves, r);
    summary = summary_json(cfg, r);
  } else {
    const auto rep = cost_ratio_report(cfg);
    auto ratios = open("ratios.csv");
    write_ratios_csv(ratios, rep);
    summary = summary_json(cfg, rep);
  }
  auto s = open("summary.json");
  s << summary.dump(2) << '\n';
  if (!s) throw std::runtime_error("write failed in " + out_dir.string());
  return summary.at("all_pass").get<bool>();
}

}  // namespace ecd::harness
