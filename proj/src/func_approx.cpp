#include "bsde/func_approx.hpp"

#include "bsde/errors.hpp"
#include "bsde/kernels.hpp"

namespace bsde {

std::vector<Eigen::MatrixXd> LinearFn::hessian(const Eigen::VectorXd&) const {
  return std::vector<Eigen::MatrixXd>(G.rows(), Eigen::MatrixXd::Zero(G.cols(), G.cols()));
}

namespace {

// The 1-norm estimate behind rcond() bounds the 2-norm condition number from
// above up to the estimator's slack; 1e-9 keeps well clear of kRankTolerance.
constexpr double kCholeskyMinRcond = 1e-9;

}  // namespace

LeastSquaresSolution solve_least_squares(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Y) {
  if (F.rows() != Y.rows()) throw Error(ErrorCode::DimensionMismatch, "design/target row count");
  if (!F.allFinite() || !Y.allFinite())
    throw Error(ErrorCode::NonFinite, "least squares on non-finite data");

  const kernels::NormalEquations ne = kernels::normal_equations(F, Y);

  // Well-conditioned systems have a unique solution, which Cholesky gets at
  // a fraction of the cost of the eigendecomposition.
  const Eigen::LLT<Eigen::MatrixXd> llt(ne.gram);
  if (llt.info() == Eigen::Success && llt.rcond() > kCholeskyMinRcond) {
    Eigen::MatrixXd coeffs = llt.solve(ne.rhs);
    if (!coeffs.allFinite()) throw Error(ErrorCode::NonFinite, "least squares produced non-finite fit");
    return {std::move(coeffs), static_cast<int>(F.cols())};
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ne.gram);
  const Eigen::VectorXd& lambda = es.eigenvalues();
  const double cutoff = kRankTolerance * std::max(lambda.maxCoeff(), 0.0);

  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
  int rank = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > cutoff && lambda(i) > 0.0) {
      inv(i) = 1.0 / lambda(i);
      ++rank;
    }
  }
  const Eigen::MatrixXd& V = es.eigenvectors();
  Eigen::MatrixXd coeffs = V * (inv.asDiagonal() * (V.transpose() * ne.rhs));
  if (!coeffs.allFinite()) throw Error(ErrorCode::NonFinite, "least squares produced non-finite fit");
  return {std::move(coeffs), rank};
}

int quadratic_parameter_count(int n) { return n * (n + 1) / 2 + 1; }

Eigen::MatrixXd quadratic_features(const Eigen::MatrixXd& xs) {
  const Eigen::Index n = xs.cols();
  Eigen::MatrixXd F(xs.rows(), quadratic_parameter_count(static_cast<int>(n)));
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    F.col(col++) = 0.5 * xs.col(i).array().square();
    for (Eigen::Index j = i + 1; j < n; ++j) F.col(col++) = xs.col(i).cwiseProduct(xs.col(j));
  }
  F.col(col).setOnes();
  return F;
}

Fit<QuadraticFn> fit_quadratic(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys) {
  const Eigen::Index n = xs.cols();
  const int p = quadratic_parameter_count(static_cast<int>(n));
  if (xs.rows() < p) throw Error(ErrorCode::TooFewSamples, "quadratic fit needs N >= n(n+1)/2 + 1");
  const LeastSquaresSolution ls = solve_least_squares(quadratic_features(xs), ys);

  QuadraticFn f{Eigen::MatrixXd(n, n), 0.0};
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    f.G(i, i) = ls.coefficients(col++, 0);
    for (Eigen::Index j = i + 1; j < n; ++j) f.G(i, j) = f.G(j, i) = ls.coefficients(col++, 0);
  }
  f.g = ls.coefficients(col, 0);
  return {std::move(f), {p, ls.rank}};
}

Fit<LinearFn> fit_linear(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& Ys) {
  const Eigen::Index n = xs.cols();
  if (xs.rows() < n) throw Error(ErrorCode::TooFewSamples, "linear fit needs N >= n");
  // One factorization serves every output row; row r of G is column r of the solution.
  const LeastSquaresSolution ls = solve_least_squares(xs, Ys);
  return {LinearFn{ls.coefficients.transpose()}, {static_cast<int>(n), ls.rank}};
}

Eigen::VectorXd values(const QuadraticFn& f, const Eigen::MatrixXd& X) {
  return (0.5 * (X * f.G).cwiseProduct(X).rowwise().sum()).array() + f.g;
}

Eigen::MatrixXd gradients(const QuadraticFn& f, const Eigen::MatrixXd& X) {
  return X * f.G.transpose();
}

Eigen::MatrixXd values(const LinearFn& f, const Eigen::MatrixXd& X) {
  return X * f.G.transpose();
}

}  // namespace bsde
