#pragma once

#include "bsde/lq_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <ostream>
#include <vector>

namespace bsde {

/// Linear feedback u = K_k x, one m x n gain per grid index 0..steps
/// (the terminal gain is stored but never used by the simulation).
struct ControlLaw {
  TimeGrid grid;
  std::vector<Eigen::MatrixXd> gains;

  static ControlLaw zero(const TimeGrid& grid, int control_dim, int state_dim);
  bool finite() const;
};

struct TrajectoryBatch {
  TimeGrid grid;
  std::uint64_t seed = 0;
  int samples = 0;
  std::vector<Eigen::MatrixXd> X;  // [steps + 1] x (samples x n)
  bool diverged = false;

  int state_dim() const { return static_cast<int>(X.front().cols()); }
};

/// Overflow threshold beyond which a path is declared diverged.
inline constexpr double kOverflowGuard = 1e15;

/// L with L L' = Sigma0: Cholesky, or a clamped symmetric eigenfactor when
/// Sigma0 is only semidefinite.
Eigen::MatrixXd initial_factor(const Eigen::MatrixXd& Sigma0);

/// Euler-Maruyama under `law`, bit-reproducible for fixed (seed, samples, grid).
TrajectoryBatch simulate_forward(const LQProblem& prob, const ControlLaw& law, int samples,
                                 const TimeGrid& grid, std::uint64_t seed);

struct CostEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  bool diverged = false;
};

/// Monte-Carlo control cost with a left-endpoint Riemann sum; a diverged batch
/// yields a NaN mean with the flag set.
CostEstimate estimate_cost(const LQProblem& prob, const ControlLaw& law, const TrajectoryBatch& batch);

/// Debug dump: t, sample, x[0..n-1].
void write_batch_csv(std::ostream& out, const TrajectoryBatch& batch);

}  // namespace bsde
