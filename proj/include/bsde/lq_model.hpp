#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bsde {

/// Uniform grid {0, dt, ..., steps*dt = T}.
struct TimeGrid {
  double T = 0.0;
  int steps = 0;
  double dt = 0.0;

  double time(int k) const { return k == steps ? T : k * dt; }
  std::vector<double> times() const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Throws InvalidGrid unless T/dt is an integer to 1e-10 relative.
TimeGrid make_grid(double T, double dt);

/// round(T/dt) steps (at least one) of size T/steps, for nominal step sizes
/// that do not divide T.
TimeGrid make_grid_nearest(double T, double dt);

/// dX = (A X + B U) dt + sigma dW, X_0 ~ N(m0, Sigma0), with cost
/// E[ int 1/2 x'Qx + 1/2 u'Ru dt + 1/2 X_T' Qf X_T ].
///
/// Plain aggregate so that tests can build deliberately invalid instances;
/// make_lq() is the validating constructor everything else should use.
struct LQProblem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::MatrixXd Qf;
  Eigen::VectorXd m0;
  Eigen::MatrixXd Sigma0;
  double T = 1.0;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int control_dim() const { return static_cast<int>(B.cols()); }
  /// D = sigma sigma'.
  Eigen::MatrixXd diffusion() const { return sigma * sigma.transpose(); }
};

LQProblem make_lq(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                  const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& Q,
                  const Eigen::MatrixXd& R, const Eigen::MatrixXd& Qf,
                  const Eigen::VectorXd& m0, const Eigen::MatrixXd& Sigma0, double T);

/// Re-runs make_lq validation on an existing instance.
LQProblem validated(const LQProblem& prob);

/// Damped oscillator used throughout the benchmarks (n = 2, m = 1, T = 4).
LQProblem builtin_2d();

/// Tridiagonal stiffness matrix: 2 on the diagonal, -1 on both off-diagonals.
Eigen::MatrixXd toeplitz_stiffness(int p);

/// Chain of p unit masses; n = 2p, m = p. The initial mean defaults to the
/// all-ones vector.
LQProblem mass_spring(int p, const std::optional<Eigen::VectorXd>& m0 = std::nullopt,
                      double T = 4.0);

/// a(x,u) = A x + sigma Btilde u, i.e. Btilde = sigma^{-1} B.
struct ControlAffineParts {
  Eigen::MatrixXd drift;
  Eigen::MatrixXd Btilde;
};

ControlAffineParts control_affine_parts(const LQProblem& prob);

double running_cost(const LQProblem& prob, const Eigen::VectorXd& x, const Eigen::VectorXd& u);
double terminal_cost(const LQProblem& prob, const Eigen::VectorXd& x);

/// JSON object with keys A, B, sigma, Q, R, Qf, m0, Sigma0, T; matrices are
/// row-major nested arrays.
std::string problem_to_json(const LQProblem& prob);
LQProblem problem_from_json(std::string_view text);
LQProblem load_problem(const std::string& path);
void save_problem(const LQProblem& prob, const std::string& path);

}  // namespace bsde
