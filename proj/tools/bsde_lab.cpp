// bsde-lab: command-line driver for the policy-iteration experiments.
#include "bsde/errors.hpp"
#include "bsde/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> problem;
  std::vector<std::string> methods;
  std::optional<int> N;
  std::optional<double> dt;
  std::optional<double> T;
  std::optional<int> iters;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool jitter = false;
  std::optional<int> threads;
};

void add_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config; keys mirror the option names");
  cmd->add_option("--problem", o.problem, "builtin-2d, mass-spring:p, or a problem JSON file");
  cmd->add_option("--methods", o.methods, "comma-separated: ls-v,ls-c,tr-v,tr-c (solve: or oracle)")
      ->delimiter(',');
  cmd->add_option("--N", o.N, "sample size");
  cmd->add_option("--dt", o.dt, "time step");
  cmd->add_option("--T", o.T, "horizon (default: the problem's)");
  cmd->add_option("--iters", o.iters, "policy iterations");
  cmd->add_option("--trials", o.trials, "independent trials");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--jitter", o.jitter, "regularize score covariances with a small ridge");
  cmd->add_option("--threads", o.threads, "worker threads (0: OpenMP default)");
}

bsde::ExperimentConfig build_config(bsde::Experiment e, const Overrides& o) {
  bsde::ExperimentConfig c = bsde::default_config(e);
  if (!o.config.empty()) {
    std::ifstream f(o.config);
    if (!f) throw bsde::Error(bsde::ErrorCode::InvalidArgument, "cannot read config '" + o.config + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    c = bsde::merge_config_json(c, ss.str());
    c.experiment = e;
  }
  if (o.problem) c.problem = *o.problem;
  if (!o.methods.empty()) c.methods = o.methods;
  if (o.N) c.N = *o.N;
  if (o.dt) c.dt = *o.dt;
  if (o.T) c.T = *o.T;
  if (o.iters) c.iters = *o.iters;
  if (o.trials) c.trials = *o.trials;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.jitter) c.jitter = true;
  if (o.threads) c.threads = *o.threads;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BSDE policy-iteration workbench for linear-quadratic control"};
  app.require_subcommand(1);

  Overrides o;
  const std::vector<std::pair<bsde::Experiment, const char*>> commands{
      {bsde::Experiment::Table1, "all four methods on one problem, per-trial MSE and cost series"},
      {bsde::Experiment::SweepDt, "MSE and instability counts over a grid of time steps"},
      {bsde::Experiment::SweepN, "MSE and instability counts over a grid of sample sizes"},
      {bsde::Experiment::SweepDim, "normalized MSE over mass-spring chains of growing size"},
      {bsde::Experiment::Solve, "single run of one method (or the Riccati oracle)"},
  };
  std::vector<std::pair<CLI::App*, bsde::Experiment>> subs;
  for (const auto& [e, help] : commands) {
    CLI::App* cmd = app.add_subcommand(std::string(bsde::to_string(e)), help);
    add_options(cmd, o);
    subs.emplace_back(cmd, e);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    bsde::Experiment e = bsde::Experiment::Table1;
    for (const auto& [cmd, which] : subs)
      if (cmd->parsed()) e = which;
    const bsde::ExperimentConfig config = build_config(e, o);
    const bsde::ExperimentSummary s = bsde::run_experiment(config);
    std::cout << bsde::to_string(e) << ": " << s.total_trials << " trials, " << s.unstable_trials
              << " unstable; wrote";
    for (const auto& f : s.files) std::cout << ' ' << f;
    std::cout << " to " << config.out << '\n';
    if (s.all_unstable()) {
      std::cerr << "all trials unstable\n";
      return 2;
    }
  } catch (const bsde::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == bsde::ErrorCode::InvalidArgument || e.code() == bsde::ErrorCode::InvalidGrid
               ? 1
               : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
