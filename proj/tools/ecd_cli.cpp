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

// Command-line front end. Outcome labels are printed 1-based, as in
// instance files.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ecd/adversarial.hpp"
#include "ecd/econ.hpp"
#include "ecd/harness.hpp"
#include "ecd/io.hpp"
#include "ecd/oracle.hpp"
#include "ecd/policies.hpp"
#include "ecd/service.hpp"

namespace {

using nlohmann::json;

struct PolicyArgs {
  std::string instance;
  std::string criterion = "ec2";
  std::string mode = "ecd";
  std::string tie_break = "lowest";
  std::uint64_t seed = 0;
  std::size_t budget = 0;  // 0 = no budget
};

void add_policy_options(CLI::App* cmd, PolicyArgs& a) {
  cmd->add_option("--instance", a.instance, "instance JSON file")->required();
  cmd->add_option("--criterion", a.criterion, "ec2|effecxtive|gbs|ig_class|ig_hyp|us|voi|random");
  cmd->add_option("--mode", a.mode, "ecd|odt");
  cmd->add_option("--tie-break", a.tie_break, "lowest|seeded");
  cmd->add_option("--seed", a.seed);
  cmd->add_option("--budget", a.budget, "maximum number of tests");
}

ecd::PolicySpec make_spec(const PolicyArgs& a) {
  ecd::PolicySpec s;
  s.criterion = ecd::harness::require_criterion(a.criterion);
  const auto mode = ecd::parse_mode(a.mode);
  if (!mode) throw ecd::ValidationError("unknown mode '" + a.mode + "'");
  s.mode = *mode;
  if (a.tie_break == "seeded") s.tie_break = ecd::TieBreak::seeded_random;
  else if (a.tie_break != "lowest") throw ecd::ValidationError("unknown tie break '" + a.tie_break + "'");
  s.seed = a.seed;
  if (a.budget > 0) s.budget = a.budget;
  return s;
}

std::string num(double x) { return json(x).dump(); }

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equivalence class determination toolkit"};
  app.require_subcommand(1);

  PolicyArgs run_args;
  std::string truth;
  auto* run = app.add_subcommand("run-policy", "run a policy against one true hypothesis");
  add_policy_options(run, run_args);
  run->add_option("--truth", truth, "true hypothesis id")->required();

  PolicyArgs cost_args;
  auto* cost = app.add_subcommand("expected-cost", "expected cost of a policy over the prior");
  add_policy_options(cost, cost_args);

  std::string opt_instance, opt_mode = "ecd";
  auto* opt = app.add_subcommand("optimal-cost", "optimal expected cost by exhaustive search");
  opt->add_option("--instance", opt_instance)->required();
  opt->add_option("--mode", opt_mode, "ecd|odt");

  std::string prop_instance;
  auto* props = app.add_subcommand("check-properties",
                                   "exhaustive monotonicity and submodularity checks");
  props->add_option("--instance", prop_instance)->required();

  std::string family, gen_out = "-";
  std::size_t gen_n = 4, gen_q = 2, gen_dummies = 0;
  auto* gen = app.add_subcommand("gen-adversarial", "write an adversarial instance");
  gen->add_option("--family", family, "gbs-bad|posterior-bad")->required();
  gen->add_option("--n", gen_n, "hypotheses (gbs-bad)");
  gen->add_option("--q", gen_q, "bits (posterior-bad)");
  gen->add_option("--dummies", gen_dummies, "constant tests (posterior-bad)");
  gen->add_option("--out", gen_out, "output file, - for stdout");

  std::string sim_config, sim_out;
  auto* sim = app.add_subcommand("simulate", "run a simulation scenario");
  sim->add_option("--config", sim_config)->required();
  sim->add_option("--out-dir", sim_out)->required();

  int port = 8080;
  std::string serve_config, data_dir = "sessions", host = "0.0.0.0";
  bool no_cors = false;
  auto* serve = app.add_subcommand("serve", "live elicitation service");
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--config", serve_config, "econ config JSON");
  serve->add_option("--data-dir", data_dir);
  serve->add_flag("--no-cors", no_cors);

  std::string export_config, export_out = "-";
  auto* exp = app.add_subcommand("export-tests", "write the lottery-pair pool as CSV");
  exp->add_option("--config", export_config, "econ config JSON");
  exp->add_option("--out", export_out);

  std::string replay_file;
  auto* replay = app.add_subcommand("replay-log", "rebuild a session from its log file");
  replay->add_option("--log", replay_file)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto inst = ecd::load_instance(run_args.instance);
      const auto h = inst.find_hypothesis(truth);
      if (!h) throw ecd::ValidationError("unknown hypothesis '" + truth + "'");
      const auto spec = make_spec(run_args);
      const auto trace = ecd::run_policy(spec, inst, *h, spec.seed);
      double acc = 0.0;
      for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        const auto& o = trace.steps[k];
        acc += inst.cost(o.test);
        std::cout << json{{"step", k + 1},
                          {"test", inst.test_id(o.test)},
                          {"outcome", o.outcome + 1},
                          {"cost", acc}}
                         .dump()
                  << '\n';
      }
      json vs = json::array();
      for (std::size_t g : trace.final_version_space) vs.push_back(inst.hypothesis_id(g));
      std::cout << json{{"cost", trace.cost},
                        {"terminal", trace.terminal},
                        {"version_space", vs},
                        {"class_posterior", trace.final_class_posterior}}
                       .dump()
                << '\n';
    } else if (*cost) {
      const auto inst = ecd::load_instance(cost_args.instance);
      std::cout << num(ecd::expected_cost(make_spec(cost_args), inst)) << '\n';
    } else if (*opt) {
      const auto inst = ecd::load_instance(opt_instance);
      const auto mode = ecd::parse_mode(opt_mode);
      if (!mode) throw ecd::ValidationError("unknown mode '" + opt_mode + "'");
      const auto r = ecd::optimal_expected_cost(inst, *mode);
      std::cout << json{{"opt", r.cost},
                        {"root_test", r.root_test ? json(inst.test_id(*r.root_test)) : json(nullptr)}}
                       .dump()
                << '\n';
    } else if (*props) {
      const auto inst = ecd::load_instance(prop_instance);
      const auto mono = ecd::check_strong_monotonicity(inst);
      const auto sub = ecd::check_adaptive_submodularity(inst);
      std::cout << json{{"strong_adaptive_monotonicity", ecd::to_json(inst, mono)},
                        {"adaptive_submodularity", ecd::to_json(inst, sub)},
                        {"pass", mono.pass && sub.pass}}
                       .dump(2)
                << '\n';
      return mono.pass && sub.pass ? 0 : 1;
    } else if (*gen) {
      ecd::EcdInstance inst = [&] {
        if (family == "gbs-bad") return ecd::gen_gbs_bad({gen_n});
        if (family == "posterior-bad") return ecd::gen_posterior_bad({gen_q, gen_dummies});
        throw ecd::ValidationError("unknown family '" + family + "'");
      }();
      write_text(gen_out, ecd::to_json(inst).dump(2) + "\n");
    } else if (*sim) {
      const auto cfg = ecd::harness::sim_config_from_json(ecd::read_json_file(sim_config));
      const bool ok = ecd::harness::run_simulation(cfg, sim_out);
      if (!ok) std::cerr << "ordinal or bound check failed; see summary.json\n";
      return ok ? 0 : 1;
    } else if (*serve) {
      const json cfg = serve_config.empty() ? json::object() : ecd::read_json_file(serve_config);
      ecd::service::SessionStore store(data_dir, cfg);
      const std::size_t restored = store.restore();
      httplib::Server server;
      ecd::service::register_routes(server, store, !no_cors);
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      std::cerr << "restored " << restored << " session(s); listening on " << host << ':' << port
                << '\n';
      if (!server.listen(host, port)) {
        std::cerr << "cannot listen on " << host << ':' << port << '\n';
        return 1;
      }
    } else if (*exp) {
      const json cfg = export_config.empty() ? json::object() : ecd::read_json_file(export_config);
      const auto econ_cfg = ecd::econ::econ_config_from_json(cfg);
      std::ostringstream os;
      ecd::econ::write_test_pool_csv(os, ecd::econ::enumerate_tests(econ_cfg.pool));
      write_text(export_out, os.str());
    } else if (*replay) {
      std::ifstream in(replay_file);
      if (!in) throw std::runtime_error("cannot open " + replay_file);
      std::vector<ecd::service::LogRecord> log;
      for (std::string line; std::getline(in, line);)
        if (!line.empty()) log.push_back(ecd::service::record_from_json(json::parse(line)));
      const auto state = ecd::service::replay_log(log);
      std::cout << ecd::service::posterior_summary(state).dump(2) << '\n';
    }
  } catch (const ecd::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
