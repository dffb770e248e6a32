#include "bsde/kernels.hpp"

#include "bsde/rng.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace bsde::kernels::serial {

PathSet simulate_paths(const EulerPlan& plan, int samples, std::uint64_t seed) {
  const int steps = static_cast<int>(plan.drift.size());
  const Eigen::Index n = plan.mean0.size();
  const double sqrt_dt = std::sqrt(plan.dt);

  std::vector<std::mt19937_64> engines;
  std::vector<std::normal_distribution<double>> normals(samples);
  engines.reserve(samples);
  for (int i = 0; i < samples; ++i) engines.push_back(sample_engine(seed, i));

  auto draw = [&](double scale) {
    Eigen::MatrixXd Z(samples, n);
    for (int i = 0; i < samples; ++i)
      for (Eigen::Index j = 0; j < n; ++j) Z(i, j) = scale * normals[i](engines[i]);
    return Z;
  };

  PathSet out;
  out.diverged.assign(samples, 0);
  out.X.reserve(steps + 1);
  out.X.push_back((draw(1.0) * plan.init_factor.transpose()).rowwise() + plan.mean0.transpose());
  for (int k = 0; k < steps; ++k) {
    const Eigen::MatrixXd dW = draw(sqrt_dt);
    const Eigen::MatrixXd& X = out.X.back();
    out.X.push_back(X + (plan.dt * (X * plan.drift[k].transpose()) + dW * plan.sigma.transpose()));
  }

  // A path that leaves the guard is cut at its first offending state.
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < samples; ++i) {
    for (int k = 1; k <= steps; ++k) {
      const auto row = out.X[k].row(i);
      if (!(row.cwiseAbs().maxCoeff() <= plan.overflow_guard) || !row.allFinite()) {
        out.diverged[i] = 1;
        for (int r = k; r <= steps; ++r) out.X[r].row(i).setConstant(nan);
        break;
      }
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> gaussian_increments(int samples, int steps, int dim, double dt,
                                                 std::uint64_t seed) {
  std::vector<Eigen::MatrixXd> dW(steps, Eigen::MatrixXd(samples, dim));
  const double sqrt_dt = std::sqrt(dt);
  for (int i = 0; i < samples; ++i) {
    auto engine = sample_engine(seed, i);
    std::normal_distribution<double> normal;
    for (int s = 0; s < steps; ++s)
      for (int j = 0; j < dim; ++j) dW[s](i, j) = sqrt_dt * normal(engine);
  }
  return dW;
}

Eigen::MatrixXd reverse_euler_step(const Eigen::MatrixXd& X, const Eigen::MatrixXd& drift,
                                   const Eigen::MatrixXd& score_coef,
                                   const Eigen::VectorXd& score_mean, const Eigen::MatrixXd& sigma,
                                   double dt, const Eigen::MatrixXd& dW) {
  const Eigen::MatrixXd centered = X.rowwise() - score_mean.transpose();
  return X - dt * (X * drift.transpose()) - dt * (centered * score_coef.transpose()) -
         dW * sigma.transpose();
}

NormalEquations normal_equations(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Y) {
  return {F.transpose() * F, F.transpose() * Y};
}

Eigen::VectorXd path_costs(const std::vector<Eigen::MatrixXd>& X,
                           const std::vector<Eigen::MatrixXd>& gains, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& R, const Eigen::MatrixXd& Qf, double dt) {
  const int steps = static_cast<int>(X.size()) - 1;
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(X.front().rows());
  for (int k = 0; k < steps; ++k) {
    const Eigen::MatrixXd U = X[k] * gains[k].transpose();
    cost += dt * (0.5 * (X[k] * Q).cwiseProduct(X[k]).rowwise().sum() +
                  0.5 * (U * R).cwiseProduct(U).rowwise().sum());
  }
  cost += 0.5 * (X[steps] * Qf).cwiseProduct(X[steps]).rowwise().sum();
  return cost;
}

}  // namespace bsde::kernels::serial
