#include "bsde/kernels.hpp"

#include "bsde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace bsde::kernels {
PathSet simulate_paths(const EulerPlan& plan, int samples, std::uint64_t seed) {
  const int steps = static_cast<int>(plan.drift.size());
  const Eigen::Index n = plan.mean0.size();
  const double sqrt_dt = std::sqrt(plan.dt);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  PathSet out{std::vector<Eigen::MatrixXd>(steps + 1, Eigen::MatrixXd(samples, n)),
              std::vector<std::uint8_t>(samples, 0)};
  const Eigen::MatrixXd init_t = plan.init_factor.transpose();
  const Eigen::MatrixXd sigma_t = plan.sigma.transpose();
  const Eigen::Index chunks = (samples + kReductionChunk - 1) / kReductionChunk;

  // Each chunk draws its samples' normals from their own engines, then steps
  // the whole block at once. Chunk boundaries are fixed, so the arithmetic
  // does not depend on how chunks are spread over threads.
#pragma omp parallel
  {
    Eigen::MatrixXd draws, X, Xn;
#pragma omp for schedule(static)
    for (Eigen::Index c = 0; c < chunks; ++c) {
      const Eigen::Index begin = c * kReductionChunk;
      const Eigen::Index rows = std::min<Eigen::Index>(kReductionChunk, samples - begin);
      draws.resize(rows, n * (steps + 1));
      for (Eigen::Index r = 0; r < rows; ++r) {
        auto engine = sample_engine(seed, static_cast<std::uint64_t>(begin + r));
        std::normal_distribution<double> normal;
        for (Eigen::Index j = 0; j < n; ++j) draws(r, j) = normal(engine);
        for (Eigen::Index j = n; j < draws.cols(); ++j) draws(r, j) = sqrt_dt * normal(engine);
      }
      X = (draws.leftCols(n) * init_t).rowwise() + plan.mean0.transpose();
      out.X[0].middleRows(begin, rows) = X;
      for (int k = 0; k < steps; ++k) {
        Xn = X;
        Xn.noalias() += plan.dt * (X * plan.drift[k].transpose());
        Xn.noalias() += draws.middleCols(n * (k + 1), n) * sigma_t;
        for (Eigen::Index r = 0; r < rows; ++r) {
          if (out.diverged[begin + r]) continue;
          bool bad = false;
          for (Eigen::Index j = 0; j < n; ++j)
            if (!(std::abs(Xn(r, j)) <= plan.overflow_guard)) bad = true;  // also catches NaN
          if (bad) {
            out.diverged[begin + r] = 1;
            Xn.row(r).setConstant(nan);
          }
        }
        out.X[k + 1].middleRows(begin, rows) = Xn;
        X.swap(Xn);
      }
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> gaussian_increments(int samples, int steps, int dim, double dt,
                                                 std::uint64_t seed) {
  std::vector<Eigen::MatrixXd> dW(steps, Eigen::MatrixXd(samples, dim));
  const double sqrt_dt = std::sqrt(dt);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < samples; ++i) {
    auto engine = sample_engine(seed, static_cast<std::uint64_t>(i));
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
  const Eigen::Index N = X.rows();
  const Eigen::Index n = X.cols();
  Eigen::MatrixXd out(N, n);
#pragma omp parallel
  {
    Eigen::VectorXd x(n), centered(n), a(n), b(n), noise(n), w(n);
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < N; ++i) {
      x = X.row(i).transpose();
      w = dW.row(i).transpose();
      centered = x - score_mean;
      a.noalias() = drift * x;
      b.noalias() = score_coef * centered;
      noise.noalias() = sigma * w;
      out.row(i) = (x - dt * a - dt * b - noise).transpose();
    }
  }
  return out;
}

NormalEquations normal_equations(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Y) {
  const Eigen::Index N = F.rows();
  const Eigen::Index p = F.cols();
  const Eigen::Index q = Y.cols();
  const Eigen::Index chunks = (N + kReductionChunk - 1) / kReductionChunk;
  std::vector<Eigen::MatrixXd> gram(chunks), rhs(chunks);

#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index begin = c * kReductionChunk;
    const Eigen::Index rows = std::min(kReductionChunk, N - begin);
    const auto Fc = F.middleRows(begin, rows);
    gram[c] = Eigen::MatrixXd::Zero(p, p);
    gram[c].selfadjointView<Eigen::Lower>().rankUpdate(Fc.transpose());
    rhs[c].noalias() = Fc.transpose() * Y.middleRows(begin, rows);
  }

  NormalEquations out{Eigen::MatrixXd::Zero(p, p), Eigen::MatrixXd::Zero(p, q)};
  for (Eigen::Index c = 0; c < chunks; ++c) {
    out.gram += gram[c];
    out.rhs += rhs[c];
  }
  out.gram = out.gram.selfadjointView<Eigen::Lower>();
  return out;
}

Eigen::VectorXd path_costs(const std::vector<Eigen::MatrixXd>& X,
                           const std::vector<Eigen::MatrixXd>& gains, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& R, const Eigen::MatrixXd& Qf, double dt) {
  const int steps = static_cast<int>(X.size()) - 1;
  const Eigen::Index N = X.front().rows();
  const Eigen::Index chunks = (N + kReductionChunk - 1) / kReductionChunk;
  Eigen::VectorXd cost(N);
#pragma omp parallel
  {
    Eigen::MatrixXd U;
#pragma omp for schedule(static)
    for (Eigen::Index c = 0; c < chunks; ++c) {
      const Eigen::Index begin = c * kReductionChunk;
      const Eigen::Index rows = std::min<Eigen::Index>(kReductionChunk, N - begin);
      Eigen::VectorXd running = Eigen::VectorXd::Zero(rows);
      for (int k = 0; k < steps; ++k) {
        const auto Xk = X[k].middleRows(begin, rows);
        U.noalias() = Xk * gains[k].transpose();
        running += (0.5 * (Xk * Q).cwiseProduct(Xk).rowwise().sum() +
                    0.5 * (U * R).cwiseProduct(U).rowwise().sum()) *
                   dt;
      }
      const auto XT = X[steps].middleRows(begin, rows);
      cost.segment(begin, rows) = running + 0.5 * (XT * Qf).cwiseProduct(XT).rowwise().sum();
    }
  }
  return cost;
}

}  // namespace bsde::kernels
