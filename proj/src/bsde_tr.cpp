#include "bsde/bsde_tr.hpp"

#include "bsde/errors.hpp"
#include "bsde/kernels.hpp"

#include <limits>

namespace bsde {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void abort_at(ApproxSolution& sol, int from) {
  sol.flags.unstable = true;
  sol.flags.abort_step = from;
  std::visit(
      [from](auto& params) {
        for (int k = 0; k <= from; ++k) {
          params[k].G.setConstant(kNaN);
          if constexpr (requires { params[k].g; }) params[k].g = kNaN;
        }
      },
      sol.params);
}

bool within_guard(const Eigen::MatrixXd& X) {
  return X.allFinite() && X.cwiseAbs().maxCoeff() <= kOverflowGuard;
}

// Fits phi(t - dt, .) into params[k - 1]; false on a non-finite regression.
template <class Fn>
bool refit(ApproxSolution& sol, std::vector<Fn>& params, int k, const Eigen::MatrixXd& X,
           const Eigen::MatrixXd& Y) {
  try {
    if constexpr (std::is_same_v<Fn, QuadraticFn>) {
      auto fit = fit_quadratic(X, Y.col(0));
      if (fit.diagnostics.rank_deficient()) ++sol.flags.rank_deficient_steps;
      params[k - 1] = std::move(fit.fn);
    } else {
      auto fit = fit_linear(X, Y);
      if (fit.diagnostics.rank_deficient()) ++sol.flags.rank_deficient_steps;
      params[k - 1] = std::move(fit.fn);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NonFinite) throw;
    ++sol.flags.nonfinite_fits;
    return false;
  }
  return true;
}

TrTrace run_tr(const LQProblem& prob, const ControlLaw& law, const TrajectoryBatch& batch,
               const std::vector<AffineScore>& scores, DriverKind kind,
               std::uint64_t seed_backward, bool keep_trace) {
  const TimeGrid& grid = batch.grid;
  if (!(law.grid == grid)) throw Error(ErrorCode::DimensionMismatch, "law and batch grids differ");
  if (static_cast<int>(scores.size()) != grid.steps + 1)
    throw Error(ErrorCode::DimensionMismatch, "need one score per grid index");

  const int K = grid.steps;
  const double dt = grid.dt;
  const int N = batch.samples;
  const int n = prob.state_dim();
  const Eigen::MatrixXd D = prob.diffusion();

  TrTrace out{terminal_solution(prob, grid, kind), {}};
  ApproxSolution& sol = out.solution;
  if (batch.diverged) {
    abort_at(sol, K - 1);
    return out;
  }
  ReversedBatch& trace = out.reversed;
  trace.seed_backward = seed_backward;
  if (keep_trace) {
    trace.X.resize(K + 1);
    trace.Y.resize(K + 1);
    trace.noise.resize(K + 1);
  }

  // Step s of the reversed loop (k = K - s) uses increments[s].
  const std::vector<Eigen::MatrixXd> increments =
      kernels::gaussian_increments(N, K, n, dt, seed_backward);

  Eigen::MatrixXd X = batch.X[K];
  if (kind == DriverKind::Value) {
    auto& params = std::get<std::vector<QuadraticFn>>(sol.params);
    const Eigen::MatrixXd Btilde = control_affine_parts(prob).Btilde;
    Eigen::MatrixXd Y = values(params[K], X);
    Eigen::MatrixXd Z = gradients(params[K], X) * prob.sigma;
    if (keep_trace) {
      trace.X[K] = X;
      trace.Y[K] = Y;
    }
    for (int k = K; k > 0; --k) {
      const Eigen::MatrixXd& dW = increments[K - k];
      const AffineScore& score = scores[k];
      const QuadraticFn& phi = params[k];
      const Eigen::MatrixXd drift = prob.A + prob.B * law.gains[k];

      const Eigen::MatrixXd Xprev =
          kernels::reverse_euler_step(X, drift, score.coefficient, score.mean, prob.sigma, dt, dW);
      const Eigen::MatrixXd b = eval_score_rows(score, X);
      const Eigen::VectorXd c =
          (D * phi.G).trace() - gradients(phi, X).cwiseProduct(b).rowwise().sum().array();
      const Eigen::VectorXd h = driver_value_rows(prob, Btilde, law.gains[k], X, Z);
      Y.col(0) += dt * h + dt * c - Z.cwiseProduct(dW).rowwise().sum();

      if (!within_guard(Xprev) || !Y.allFinite() || !refit(sol, params, k, Xprev, Y)) {
        abort_at(sol, k - 1);
        return out;
      }
      X = Xprev;
      Z = gradients(params[k - 1], X) * prob.sigma;
      if (keep_trace) {
        trace.X[k - 1] = X;
        trace.Y[k - 1] = Y;
        trace.noise[k] = dW;
      }
    }
  } else {
    auto& params = std::get<std::vector<LinearFn>>(sol.params);
    Eigen::MatrixXd Y = values(params[K], X);
    if (keep_trace) {
      trace.X[K] = X;
      trace.Y[K] = Y;
    }
    for (int k = K; k > 0; --k) {
      const Eigen::MatrixXd& dW = increments[K - k];
      const AffineScore& score = scores[k];
      const Eigen::MatrixXd& G = params[k].G;
      const Eigen::MatrixXd drift = prob.A + prob.B * law.gains[k];

      const Eigen::MatrixXd Xprev =
          kernels::reverse_euler_step(X, drift, score.coefficient, score.mean, prob.sigma, dt, dW);
      // Linear phi has zero Hessian, so c = -G b.
      const Eigen::MatrixXd c = -eval_score_rows(score, X) * G.transpose();
      // Z' dW = G sigma dW for phi = G x.
      const Eigen::MatrixXd noise = dW * prob.sigma.transpose() * G.transpose();
      Y += dt * driver_costate_rows(prob, X, Y) + dt * c - noise;

      if (!within_guard(Xprev) || !Y.allFinite() || !refit(sol, params, k, Xprev, Y)) {
        abort_at(sol, k - 1);
        return out;
      }
      X = Xprev;
      if (keep_trace) {
        trace.X[k - 1] = X;
        trace.Y[k - 1] = Y;
        trace.noise[k] = dW;
      }
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd reverse_step(const LQProblem& prob, const Eigen::MatrixXd& gain,
                             const AffineScore& score, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& dW, double dt) {
  const Eigen::VectorXd a = prob.A * x + prob.B * (gain * x);
  return x - a * dt - eval_score(score, x) * dt - prob.sigma * dW;
}

Eigen::VectorXd correction_c(const QuadraticFn& phi, const AffineScore& score,
                             const Eigen::MatrixXd& D, const Eigen::VectorXd& x) {
  Eigen::VectorXd c(1);
  c(0) = (D * phi.hessian(x)).trace() - phi.gradient(x).dot(eval_score(score, x));
  return c;
}

Eigen::VectorXd correction_c(const LinearFn& phi, const AffineScore& score,
                             const Eigen::MatrixXd& D, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd J = phi.jacobian(x);
  const std::vector<Eigen::MatrixXd> H = phi.hessian(x);
  const Eigen::VectorXd b = eval_score(score, x);
  Eigen::VectorXd c(J.rows());
  for (Eigen::Index i = 0; i < J.rows(); ++i)
    c(i) = (D * H[i]).trace() - J.row(i).dot(b);
  return c;
}

std::vector<AffineScore> fit_scores(const LQProblem& prob, const TrajectoryBatch& batch,
                                    Jitter jitter) {
  const Eigen::MatrixXd D = prob.diffusion();
  std::vector<AffineScore> scores;
  scores.reserve(batch.X.size());
  for (const auto& Xk : batch.X) scores.push_back(fit_affine_score(Xk, D, jitter));
  return scores;
}

ApproxSolution tr_solve(const LQProblem& prob, const ControlLaw& law,
                        const TrajectoryBatch& batch, const std::vector<AffineScore>& scores,
                        DriverKind kind, std::uint64_t seed_backward) {
  return run_tr(prob, law, batch, scores, kind, seed_backward, false).solution;
}

TrTrace tr_solve_traced(const LQProblem& prob, const ControlLaw& law,
                        const TrajectoryBatch& batch, const std::vector<AffineScore>& scores,
                        DriverKind kind, std::uint64_t seed_backward) {
  return run_tr(prob, law, batch, scores, kind, seed_backward, true);
}

}  // namespace bsde
