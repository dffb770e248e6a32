#pragma once

#include <Eigen/Dense>

#include <vector>

namespace bsde {

/// phi(x) = 1/2 x'Gx + g with G symmetric.
struct QuadraticFn {
  Eigen::MatrixXd G;
  double g = 0.0;

  double value(const Eigen::VectorXd& x) const { return 0.5 * x.dot(G * x) + g; }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const { return G * x; }
  Eigen::MatrixXd hessian(const Eigen::VectorXd&) const { return G; }
};

/// phi(x) = G x, no offset and no symmetry constraint.
struct LinearFn {
  Eigen::MatrixXd G;

  Eigen::VectorXd value(const Eigen::VectorXd& x) const { return G * x; }
  /// J(i,j) = d phi_i / d x_j.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const { return G; }
  /// One n x n Hessian per output component; all zero.
  std::vector<Eigen::MatrixXd> hessian(const Eigen::VectorXd&) const;
};

struct FitDiagnostics {
  int parameters = 0;
  int rank = 0;

  bool rank_deficient() const { return rank < parameters; }
};

template <class Fn>
struct Fit {
  Fn fn;
  FitDiagnostics diagnostics;
};

/// Minimum-norm least squares min |F c - Y|_F via the normal equations and a
/// rank-revealing eigendecomposition of F'F. Eigenvalues below
/// kRankTolerance * max eigenvalue are treated as zero. Clearly full-rank
/// systems take a Cholesky shortcut with the same solution.
struct LeastSquaresSolution {
  Eigen::MatrixXd coefficients;
  int rank = 0;
};

inline constexpr double kRankTolerance = 1e-12;

LeastSquaresSolution solve_least_squares(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Y);

/// n(n+1)/2 + 1.
int quadratic_parameter_count(int n);

/// Design matrix for the quadratic class: 1/2 x_i^2 on the diagonal,
/// x_i x_j for i < j, then a constant column.
Eigen::MatrixXd quadratic_features(const Eigen::MatrixXd& xs);

/// Throws TooFewSamples if N < quadratic_parameter_count(n), NonFinite on
/// non-finite inputs. Rank deficiency is reported, not thrown.
Fit<QuadraticFn> fit_quadratic(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys);

/// Row r of G solves min sum_i (Y_ir - G_r x_i)^2. Throws TooFewSamples if N < n.
Fit<LinearFn> fit_linear(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& Ys);

/// Row-wise evaluation helpers on (samples x n) inputs.
Eigen::VectorXd values(const QuadraticFn& f, const Eigen::MatrixXd& X);
Eigen::MatrixXd gradients(const QuadraticFn& f, const Eigen::MatrixXd& X);
Eigen::MatrixXd values(const LinearFn& f, const Eigen::MatrixXd& X);

}  // namespace bsde
