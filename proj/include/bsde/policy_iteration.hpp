#pragma once

#include "bsde/bsde_lsmc.hpp"
#include "bsde/forward_sim.hpp"
#include "bsde/riccati.hpp"
#include "bsde/score_model.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace bsde {

enum class Method { LsV, LsC, TrV, TrC };

/// "LS-V", "LS-C", "TR-V", "TR-C".
std::string_view to_string(Method m);
/// Case-insensitive; accepts "ls-v" or "LS-V" style names. Throws InvalidArgument.
Method parse_method(std::string_view name);
DriverKind kind_of(Method m);
bool uses_time_reversal(Method m);

/// K_t = -R^{-1} B' G_t from the fitted G_t of either kind. Non-finite G gives
/// non-finite gains; callers check ControlLaw::finite().
ControlLaw extract_gain(const LQProblem& prob, const ApproxSolution& approx);

struct IterationRecord {
  int iteration = 0;                  // 1-based
  std::vector<Eigen::MatrixXd> gains; // law extracted in this iteration
  double cost = 0.0;                  // Monte-Carlo cost of that law
  double cost_se = 0.0;
  double mse = 0.0;                   // NaN when the solve was unstable
  bool unstable = false;
  std::string note;
};

struct PolicyIterationConfig {
  int samples = 2000;
  TimeGrid grid;
  int iterations = 200;
  std::uint64_t seed = 0;
  Jitter jitter = Jitter::Off;
  /// Stop once max_k |K_new - K_old| falls below this. Off by default.
  std::optional<double> early_stop_tol;
  int riccati_refine = 20;
};

struct IterationHistory {
  Method method = Method::TrC;
  PolicyIterationConfig config;
  std::vector<IterationRecord> iterations;
  /// Last solution whose gains were adopted.
  std::optional<ApproxSolution> final_solution;
  std::optional<int> abort_iteration;
  bool converged_early = false;

  /// Aborted, or any iteration flagged.
  bool unstable() const;
  /// MSE of final_solution against the oracle; NaN if there is none or the
  /// run aborted.
  double final_mse() const;
};

/// Starts from the zero law. Iteration i simulates under the current law with
/// seed derive_seed(seed, i, 0), solves the BSDE (TR backward noise from
/// derive_seed(seed, i, 1)) and extracts the gain. The cost recorded for
/// iteration i is estimated on the batch of iteration i + 1, which is
/// simulated under that gain. A failed solve keeps the previous gain; a
/// diverged forward batch aborts the run.
IterationHistory run_policy_iteration(const LQProblem& prob, Method method,
                                      const PolicyIterationConfig& config);
/// Same, reusing a precomputed oracle for the per-iteration MSE.
IterationHistory run_policy_iteration(const LQProblem& prob, Method method,
                                      const PolicyIterationConfig& config,
                                      const RiccatiSolution& oracle);

/// sum_{k<K} |G_k - G*_k|_F^2 dt / (T n^2). Throws NonFinite on non-finite
/// parameters and InvalidGrid on mismatched grids.
double mse_vs_oracle(const ApproxSolution& approx, const RiccatiSolution& oracle);
double mse_vs_oracle(const std::vector<Eigen::MatrixXd>& G, const RiccatiSolution& oracle);

/// Columns: iter, cost, mse, unstable_flag.
void write_history_csv(std::ostream& out, const IterationHistory& history);

}  // namespace bsde
