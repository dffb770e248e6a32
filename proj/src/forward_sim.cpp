#include "bsde/forward_sim.hpp"

#include "bsde/csv.hpp"
#include "bsde/errors.hpp"
#include "bsde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bsde {

ControlLaw ControlLaw::zero(const TimeGrid& grid, int control_dim, int state_dim) {
  return ControlLaw{grid, std::vector<Eigen::MatrixXd>(
                              grid.steps + 1, Eigen::MatrixXd::Zero(control_dim, state_dim))};
}

bool ControlLaw::finite() const {
  return std::all_of(gains.begin(), gains.end(), [](const auto& K) { return K.allFinite(); });
}

Eigen::MatrixXd initial_factor(const Eigen::MatrixXd& Sigma0) {
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma0);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma0);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

TrajectoryBatch simulate_forward(const LQProblem& prob, const ControlLaw& law, int samples,
                                 const TimeGrid& grid, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorCode::TooFewSamples, "simulate_forward needs N >= 1");
  if (!(law.grid == grid) || static_cast<int>(law.gains.size()) != grid.steps + 1)
    throw Error(ErrorCode::DimensionMismatch, "control law grid differs from simulation grid");

  kernels::EulerPlan plan;
  plan.mean0 = prob.m0;
  plan.init_factor = initial_factor(prob.Sigma0);
  plan.sigma = prob.sigma;
  plan.dt = grid.dt;
  plan.overflow_guard = kOverflowGuard;
  plan.drift.reserve(grid.steps);
  for (int k = 0; k < grid.steps; ++k) plan.drift.push_back(prob.A + prob.B * law.gains[k]);

  kernels::PathSet paths = kernels::simulate_paths(plan, samples, seed);
  const bool diverged =
      std::any_of(paths.diverged.begin(), paths.diverged.end(), [](auto d) { return d != 0; });
  return TrajectoryBatch{grid, seed, samples, std::move(paths.X), diverged};
}

CostEstimate estimate_cost(const LQProblem& prob, const ControlLaw& law,
                           const TrajectoryBatch& batch) {
  if (batch.diverged) {
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
            true};
  }
  const Eigen::VectorXd c =
      kernels::path_costs(batch.X, law.gains, prob.Q, prob.R, prob.Qf, batch.grid.dt);
  const double N = static_cast<double>(c.size());
  const double mean = c.sum() / N;
  const double var = c.size() > 1 ? (c.array() - mean).square().sum() / (N - 1.0) : 0.0;
  return {mean, std::sqrt(var / N), !std::isfinite(mean)};
}

void write_batch_csv(std::ostream& out, const TrajectoryBatch& batch) {
  CsvWriter csv(out);
  std::vector<std::string> header{"t", "sample"};
  for (int j = 0; j < batch.state_dim(); ++j) header.push_back("x" + std::to_string(j));
  csv.header(header);
  for (int k = 0; k <= batch.grid.steps; ++k) {
    for (int i = 0; i < batch.samples; ++i) {
      csv.field(batch.grid.time(k)).field(i);
      for (int j = 0; j < batch.state_dim(); ++j) csv.field(batch.X[k](i, j));
      csv.end_row();
    }
  }
}

}  // namespace bsde
