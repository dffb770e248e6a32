#pragma once

#include "bsde/lq_model.hpp"
#include "bsde/policy_iteration.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bsde {

enum class Experiment { Table1, SweepDt, SweepN, SweepDim, Solve };

std::string_view to_string(Experiment e);
/// "table1", "sweep-dt", "sweep-n", "sweep-dim", "solve". Throws InvalidArgument.
Experiment parse_experiment(std::string_view name);

struct ExperimentConfig {
  Experiment experiment = Experiment::Table1;
  std::string problem = "builtin-2d";  // builtin-2d | mass-spring:p | path to JSON
  std::vector<std::string> methods{"ls-v", "ls-c", "tr-v", "tr-c"};
  int N = 2000;
  double dt = 0.02;
  std::optional<double> T;  // unset: the problem's own horizon
  int iters = 200;
  int trials = 15;
  std::uint64_t seed = 1;
  std::string out = "results";
  bool jitter = false;
  int threads = 0;  // 0: OpenMP default

  std::vector<double> dt_grid{0.004, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4};
  std::vector<int> N_grid{10, 50, 100, 500, 1000, 2000, 4000};
  std::vector<int> p_grid{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
};

/// Command defaults (table1: N=2000, 200 iterations; sweeps: 50 iterations,
/// N=1000 where N is not swept; solve: one trial of TR-C).
ExperimentConfig default_config(Experiment e);

/// Overlays keys from a JSON object onto `base`. Keys mirror the struct
/// fields. Throws InvalidArgument on unknown keys or bad types.
ExperimentConfig merge_config_json(const ExperimentConfig& base, std::string_view json_text);
std::string config_to_json(const ExperimentConfig& config);

/// Throws InvalidArgument when a field is out of range.
void validate(const ExperimentConfig& config);

/// builtin-2d, mass-spring:p, or a JSON problem file.
LQProblem resolve_problem(std::string_view source);

/// Per-trial master seed; shared by all methods and grid points of a command.
std::uint64_t trial_seed(std::uint64_t master, int trial);

struct TrialResult {
  std::string method;
  int trial = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  bool unstable = false;
  std::optional<int> abort_iteration;
  double final_cost = 0.0;
};

struct ExperimentSummary {
  int total_trials = 0;
  int unstable_trials = 0;
  std::vector<std::string> files;  // written, relative to config.out
  bool all_unstable() const { return total_trials > 0 && unstable_trials == total_trials; }
};

/// Runs the command and writes its CSVs plus manifest.json into config.out.
ExperimentSummary run_experiment(const ExperimentConfig& config);

ExperimentSummary cmd_table1(const ExperimentConfig& config);
ExperimentSummary cmd_sweep_dt(const ExperimentConfig& config);
ExperimentSummary cmd_sweep_n(const ExperimentConfig& config);
ExperimentSummary cmd_sweep_dim(const ExperimentConfig& config);
ExperimentSummary cmd_solve(const ExperimentConfig& config);

/// Mean and sample standard deviation (NaN below two values).
struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};
MeanStd mean_std(const std::vector<double>& values);

}  // namespace bsde
