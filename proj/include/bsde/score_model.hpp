#pragma once

#include <Eigen/Dense>

namespace bsde {

/// Empirical-moment score b(x) = D (Sigma_hat + jitter I)^{-1} (x - m_hat),
/// the exact minimizer of the score-matching objective over affine maps.
struct AffineScore {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;          // 1/N normalization
  Eigen::MatrixXd D;            // sigma sigma'
  double jitter = 0.0;
  Eigen::MatrixXd coefficient;  // D (cov + jitter I)^{-1}
};

enum class Jitter { Off, Auto };

/// Covariance condition number beyond which a fit is rejected.
inline constexpr double kMaxCovarianceCondition = 1e12;

/// Throws TooFewSamples for N < 2 and SingularCovariance when cov + jitter I
/// is numerically singular. Regularization only happens through `jitter`.
AffineScore fit_affine_score(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& D,
                             double jitter = 0.0);
AffineScore fit_affine_score(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& D, Jitter mode);

/// 1e-9 tr(cov) / n.
double auto_jitter(const Eigen::MatrixXd& cov);

Eigen::VectorXd eval_score(const AffineScore& score, const Eigen::VectorXd& x);
/// Row-wise evaluation on a (samples x n) matrix.
Eigen::MatrixXd eval_score_rows(const AffineScore& score, const Eigen::MatrixXd& X);

/// b(x) = M x + c.
struct AffineMap {
  Eigen::MatrixXd M;
  Eigen::VectorXd c;
};

AffineMap as_affine_map(const AffineScore& score);

/// Sign in front of the trace term of the objective
/// (1/N) sum_i [ 1/2 |b(x_i)|^2 -/+ tr(D db/dx(x_i)) ].
/// Minus is the convention whose affine minimizer is the empirical-moment
/// score above; Plus is kept to evaluate the other form.
enum class TraceSign { Minus, Plus };

double score_matching_objective(const AffineMap& b, const Eigen::MatrixXd& samples,
                                const Eigen::MatrixXd& D, TraceSign sign = TraceSign::Minus);

}  // namespace bsde
