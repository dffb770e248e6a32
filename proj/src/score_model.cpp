#include "bsde/score_model.hpp"

#include "bsde/errors.hpp"

namespace bsde {
namespace {

Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& samples, const Eigen::VectorXd& mean) {
  const Eigen::MatrixXd centered = samples.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(samples.rows());
  return 0.5 * (cov + cov.transpose());
}

}  // namespace

double auto_jitter(const Eigen::MatrixXd& cov) {
  return 1e-9 * cov.trace() / static_cast<double>(cov.rows());
}

AffineScore fit_affine_score(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& D,
                             double jitter) {
  const Eigen::Index n = samples.cols();
  if (samples.rows() < 2) throw Error(ErrorCode::TooFewSamples, "score fit needs N >= 2");
  if (D.rows() != n || D.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "diffusion matrix does not match sample dimension");
  if (!samples.allFinite()) throw Error(ErrorCode::NonFinite, "score fit on non-finite samples");

  AffineScore s;
  s.mean = samples.colwise().mean().transpose();
  s.cov = empirical_covariance(samples, s.mean);
  s.D = D;
  s.jitter = jitter;

  const Eigen::MatrixXd reg = s.cov + jitter * Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(reg, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() / ev.minCoeff() > kMaxCovarianceCondition)
    throw Error(ErrorCode::SingularCovariance, "empirical covariance is numerically singular");

  // D reg^{-1} = (reg^{-1} D')' with reg symmetric.
  s.coefficient = reg.llt().solve(D.transpose()).transpose();
  return s;
}

AffineScore fit_affine_score(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& D,
                             Jitter mode) {
  if (mode == Jitter::Off) return fit_affine_score(samples, D, 0.0);
  if (samples.rows() < 2) throw Error(ErrorCode::TooFewSamples, "score fit needs N >= 2");
  const Eigen::VectorXd mean = samples.colwise().mean().transpose();
  return fit_affine_score(samples, D, auto_jitter(empirical_covariance(samples, mean)));
}

Eigen::VectorXd eval_score(const AffineScore& score, const Eigen::VectorXd& x) {
  return score.coefficient * (x - score.mean);
}

Eigen::MatrixXd eval_score_rows(const AffineScore& score, const Eigen::MatrixXd& X) {
  return (X.rowwise() - score.mean.transpose()) * score.coefficient.transpose();
}

AffineMap as_affine_map(const AffineScore& score) {
  return {score.coefficient, -score.coefficient * score.mean};
}

double score_matching_objective(const AffineMap& b, const Eigen::MatrixXd& samples,
                                const Eigen::MatrixXd& D, TraceSign sign) {
  const Eigen::MatrixXd values = (samples * b.M.transpose()).rowwise() + b.c.transpose();
  const double quadratic = 0.5 * values.rowwise().squaredNorm().mean();
  // The Jacobian of an affine map is M at every sample.
  const double trace = (D * b.M).trace();
  return sign == TraceSign::Minus ? quadratic - trace : quadratic + trace;
}

}  // namespace bsde
