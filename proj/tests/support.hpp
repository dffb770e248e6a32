#pragma once
// Shared helpers for the test binaries: hand-rolled random generators and a
// few small oracles that do not go through library code.

#include "bsde/lq_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace testsupport {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>()(rng_); }

  Eigen::MatrixXd matrix(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Eigen::MatrixXd M(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) M(i, j) = scale * normal();
    return M;
  }
  Eigen::VectorXd vector(Eigen::Index n, double scale = 1.0) { return matrix(n, 1, scale); }
  Eigen::MatrixXd symmetric(Eigen::Index n) {
    const Eigen::MatrixXd M = matrix(n, n);
    return 0.5 * (M + M.transpose());
  }
  // Well-conditioned SPD: M M' / n + shift I.
  Eigen::MatrixXd spd(Eigen::Index n, double shift = 0.5) {
    const Eigen::MatrixXd M = matrix(n, n);
    return M * M.transpose() / static_cast<double>(n) + shift * Eigen::MatrixXd::Identity(n, n);
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Scalar instance with G_t = 1/(2 - t): A=0, B=R=Qf=sigma=1, Q=0, T=1.
inline bsde::LQProblem scalar_problem(double m0 = 0.0, double Sigma0 = 0.0) {
  bsde::LQProblem p;
  p.A = Eigen::MatrixXd::Zero(1, 1);
  p.B = Eigen::MatrixXd::Ones(1, 1);
  p.sigma = Eigen::MatrixXd::Ones(1, 1);
  p.Q = Eigen::MatrixXd::Zero(1, 1);
  p.R = Eigen::MatrixXd::Ones(1, 1);
  p.Qf = Eigen::MatrixXd::Ones(1, 1);
  p.m0 = Eigen::VectorXd::Constant(1, m0);
  p.Sigma0 = Eigen::MatrixXd::Constant(1, 1, Sigma0);
  p.T = 1.0;
  return p;
}

// Average ranks (1-based) with ties sharing their mean rank.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mean_rank;
    i = j + 1;
  }
  return r;
}

// Pearson correlation of the ranks; NaN with fewer than two points.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nan("");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Independent RK4 for a linear matrix ODE dM/dt = f(M) over [0, t].
template <class F>
Eigen::MatrixXd rk4(F f, Eigen::MatrixXd M, double t, int steps) {
  const double h = t / steps;
  for (int s = 0; s < steps; ++s) {
    const Eigen::MatrixXd k1 = f(M);
    const Eigen::MatrixXd k2 = f(M + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = f(M + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = f(M + h * k3);
    M += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return M;
}

}  // namespace testsupport
