#include "bsde/bsde_lsmc.hpp"

#include "bsde/errors.hpp"

#include <cmath>
#include <limits>

namespace bsde {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Marks every index <= `from` as NaN after a failed fit at `from`.
void poison_from(ApproxSolution& sol, int from) {
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

}  // namespace

std::string_view to_string(DriverKind kind) {
  return kind == DriverKind::Value ? "value" : "costate";
}

const std::vector<QuadraticFn>& ApproxSolution::value_params() const {
  return std::get<std::vector<QuadraticFn>>(params);
}

const std::vector<LinearFn>& ApproxSolution::costate_params() const {
  return std::get<std::vector<LinearFn>>(params);
}

const Eigen::MatrixXd& ApproxSolution::matrix(int k) const {
  return std::visit([k](const auto& p) -> const Eigen::MatrixXd& { return p.at(k).G; }, params);
}

bool ApproxSolution::finite() const {
  for (int k = 0; k <= grid.steps; ++k)
    if (!matrix(k).allFinite()) return false;
  if (kind == DriverKind::Value) {
    for (const auto& f : value_params())
      if (!std::isfinite(f.g)) return false;
  }
  return true;
}

double driver_value(const LQProblem& prob, const Eigen::MatrixXd& Btilde,
                    const Eigen::MatrixXd& gain, const Eigen::VectorXd& x, double,
                    const Eigen::VectorXd& z) {
  const Eigen::VectorXd Btz = Btilde.transpose() * z;
  const Eigen::VectorXd u = gain * x;
  return 0.5 * x.dot(prob.Q * x) - 0.5 * Btz.dot(prob.R.llt().solve(Btz)) - Btz.dot(u);
}

Eigen::VectorXd driver_costate(const LQProblem& prob, const Eigen::MatrixXd&,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                               const Eigen::MatrixXd&) {
  return prob.Q * x + prob.A.transpose() * y;
}

Eigen::VectorXd driver_value_rows(const LQProblem& prob, const Eigen::MatrixXd& Btilde,
                                  const Eigen::MatrixXd& gain, const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& Z) {
  const Eigen::MatrixXd ZB = Z * Btilde;  // rows (Bt' z_i)'
  const Eigen::MatrixXd U = X * gain.transpose();
  const Eigen::MatrixXd ZBRinv = prob.R.llt().solve(ZB.transpose()).transpose();
  return 0.5 * (X * prob.Q).cwiseProduct(X).rowwise().sum() -
         0.5 * ZBRinv.cwiseProduct(ZB).rowwise().sum() - ZB.cwiseProduct(U).rowwise().sum();
}

Eigen::MatrixXd driver_costate_rows(const LQProblem& prob, const Eigen::MatrixXd& X,
                                    const Eigen::MatrixXd& Y) {
  return X * prob.Q.transpose() + Y * prob.A;
}

ApproxSolution terminal_solution(const LQProblem& prob, const TimeGrid& grid, DriverKind kind) {
  ApproxSolution sol;
  sol.kind = kind;
  sol.grid = grid;
  if (kind == DriverKind::Value)
    sol.params = std::vector<QuadraticFn>(grid.steps + 1, QuadraticFn{prob.Qf, 0.0});
  else
    sol.params = std::vector<LinearFn>(grid.steps + 1, LinearFn{prob.Qf});
  return sol;
}

ApproxSolution lsmc_solve(const LQProblem& prob, const ControlLaw& law,
                          const TrajectoryBatch& batch, DriverKind kind) {
  const TimeGrid& grid = batch.grid;
  if (!(law.grid == grid)) throw Error(ErrorCode::DimensionMismatch, "law and batch grids differ");
  const int K = grid.steps;
  const double dt = grid.dt;
  ApproxSolution sol = terminal_solution(prob, grid, kind);
  if (batch.diverged) {
    poison_from(sol, K - 1);
    return sol;
  }

  if (kind == DriverKind::Value) {
    auto& params = std::get<std::vector<QuadraticFn>>(sol.params);
    const Eigen::MatrixXd Btilde = control_affine_parts(prob).Btilde;
    Eigen::VectorXd Y = values(params[K], batch.X[K]);
    Eigen::MatrixXd Z = gradients(params[K], batch.X[K]) * prob.sigma;
    for (int k = K; k > 0; --k) {
      const Eigen::VectorXd target =
          Y + dt * driver_value_rows(prob, Btilde, law.gains[k], batch.X[k], Z);
      try {
        auto fit = fit_quadratic(batch.X[k - 1], target);
        if (fit.diagnostics.rank_deficient()) ++sol.flags.rank_deficient_steps;
        params[k - 1] = std::move(fit.fn);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFinite) throw;
        ++sol.flags.nonfinite_fits;
        poison_from(sol, k - 1);
        return sol;
      }
      Y = values(params[k - 1], batch.X[k - 1]);
      Z = gradients(params[k - 1], batch.X[k - 1]) * prob.sigma;
    }
  } else {
    auto& params = std::get<std::vector<LinearFn>>(sol.params);
    Eigen::MatrixXd Y = values(params[K], batch.X[K]);
    for (int k = K; k > 0; --k) {
      const Eigen::MatrixXd target = Y + dt * driver_costate_rows(prob, batch.X[k], Y);
      try {
        auto fit = fit_linear(batch.X[k - 1], target);
        if (fit.diagnostics.rank_deficient()) ++sol.flags.rank_deficient_steps;
        params[k - 1] = std::move(fit.fn);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFinite) throw;
        ++sol.flags.nonfinite_fits;
        poison_from(sol, k - 1);
        return sol;
      }
      Y = values(params[k - 1], batch.X[k - 1]);
    }
  }
  return sol;
}

}  // namespace bsde
