#pragma once

#include "bsde/forward_sim.hpp"
#include "bsde/func_approx.hpp"
#include "bsde/lq_model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace bsde {

/// Which BSDE is solved: Value has Y = V(t, X_t) with driver h; Costate has
/// Y = dV/dx(t, X_t) with driver dH/dx.
enum class DriverKind { Value, Costate };

std::string_view to_string(DriverKind kind);

struct SolveFlags {
  bool unstable = false;
  int rank_deficient_steps = 0;
  int nonfinite_fits = 0;
  std::optional<int> abort_step;  // grid index whose fit failed
};

/// phi(t, .) for every grid index. params[steps] is the terminal data exactly.
/// Entries below an abort step are NaN.
struct ApproxSolution {
  DriverKind kind = DriverKind::Value;
  TimeGrid grid;
  std::variant<std::vector<QuadraticFn>, std::vector<LinearFn>> params;
  SolveFlags flags;

  const std::vector<QuadraticFn>& value_params() const;
  const std::vector<LinearFn>& costate_params() const;
  /// G_k of either class.
  const Eigen::MatrixXd& matrix(int k) const;
  bool finite() const;
};

/// h(x, u, y, z) = 1/2 x'Qx - 1/2 z' Bt R^{-1} Bt' z - z' Bt u with u = gain x.
double driver_value(const LQProblem& prob, const Eigen::MatrixXd& Btilde,
                    const Eigen::MatrixXd& gain, const Eigen::VectorXd& x, double y,
                    const Eigen::VectorXd& z);

/// dH/dx at fixed u: Q x + A' y. With constant sigma the tr(z sigma) term has
/// no x-dependence, so z and the gain do not enter.
Eigen::VectorXd driver_costate(const LQProblem& prob, const Eigen::MatrixXd& gain,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& z);

/// Row-wise forms over (samples x n) blocks; row i of Z is z_i'.
Eigen::VectorXd driver_value_rows(const LQProblem& prob, const Eigen::MatrixXd& Btilde,
                                  const Eigen::MatrixXd& gain, const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& Z);
Eigen::MatrixXd driver_costate_rows(const LQProblem& prob, const Eigen::MatrixXd& X,
                                    const Eigen::MatrixXd& Y);

/// Terminal function g_f of the unified BSDE for `kind`.
ApproxSolution terminal_solution(const LQProblem& prob, const TimeGrid& grid, DriverKind kind);

/// Backward least-squares Monte-Carlo recursion over a forward batch.
/// Regression targets are phi(t, X_t) + g(t, X_t, Y_t, Z_t) dt, regressed on X_{t-dt}.
ApproxSolution lsmc_solve(const LQProblem& prob, const ControlLaw& law,
                          const TrajectoryBatch& batch, DriverKind kind);

}  // namespace bsde
