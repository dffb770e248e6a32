#include "support.hpp"

#include "bsde/errors.hpp"
#include "bsde/score_model.hpp"

#include <gtest/gtest.h>

using namespace bsde;

namespace {

Eigen::MatrixXd pm_one() {
  Eigen::MatrixXd x(2, 1);
  x << -1.0, 1.0;
  return x;
}

Eigen::MatrixXd one() { return Eigen::MatrixXd::Ones(1, 1); }

}  // namespace

TEST(ScoreModel, HandFitOnPlusMinusOne) {
  const AffineScore s = fit_affine_score(pm_one(), one());
  EXPECT_EQ(s.mean(0), 0.0);
  EXPECT_EQ(s.cov(0, 0), 1.0);
  EXPECT_EQ(eval_score(s, Eigen::VectorXd::Constant(1, 1.0))(0), 1.0);
  EXPECT_EQ(eval_score(s, Eigen::VectorXd::Constant(1, 2.0))(0), 2.0);
  EXPECT_EQ(eval_score(s, s.mean)(0), 0.0);
}

TEST(ScoreModel, DegenerateSamples) {
  const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(10, 2, 3.0);
  try {
    fit_affine_score(same, Eigen::MatrixXd::Identity(2, 2));
    FAIL() << "expected SingularCovariance";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularCovariance);
  }
  EXPECT_THROW(fit_affine_score(Eigen::MatrixXd::Ones(1, 2), Eigen::MatrixXd::Identity(2, 2)), Error);
  // Jitter makes the same samples usable.
  EXPECT_NO_THROW(fit_affine_score(same, Eigen::MatrixXd::Identity(2, 2), 1e-3));
}

TEST(ScoreModel, LargeSampleGaussian) {
  testsupport::Gen gen(5);
  const Eigen::Vector2d m0(1.0, 0.0);
  const Eigen::MatrixXd X = gen.matrix(100000, 2).rowwise() + m0.transpose();
  const AffineScore s = fit_affine_score(X, Eigen::MatrixXd::Identity(2, 2));
  EXPECT_LT((s.coefficient - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LT((s.mean - m0).cwiseAbs().maxCoeff(), 0.05);
}

TEST(ScoreModel, LinearInD) {
  testsupport::Gen gen(6);
  const Eigen::MatrixXd X = gen.matrix(50, 3);
  const AffineScore a = fit_affine_score(X, Eigen::MatrixXd::Identity(3, 3));
  const AffineScore b = fit_affine_score(X, 2.0 * Eigen::MatrixXd::Identity(3, 3));
  const Eigen::Vector3d x(0.3, -1.0, 2.0);
  EXPECT_LT((eval_score(b, x) - 2.0 * eval_score(a, x)).norm(), 1e-12);
}

TEST(ScoreModel, TranslationInvariance) {
  testsupport::Gen gen(8);
  for (int c = 0; c < 10; ++c) {
    const int n = gen.integer(1, 4);
    const Eigen::MatrixXd X = gen.matrix(64, n);
    // Power-of-two shifts keep the translated samples exactly representable.
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j) v(j) = std::ldexp(1.0, gen.integer(-2, 3)) * (c % 2 ? 1 : -1);
    const Eigen::MatrixXd Y = X.rowwise() + v.transpose();
    const Eigen::MatrixXd D = gen.spd(n);
    const AffineScore a = fit_affine_score(X, D);
    const AffineScore b = fit_affine_score(Y, D);
    EXPECT_LT((b.mean - a.mean - v).norm(), 1e-12);
    EXPECT_LT((b.cov - a.cov).norm(), 1e-12 * (1.0 + a.cov.norm()));
    EXPECT_LT((b.coefficient - a.coefficient).norm(), 1e-10 * (1.0 + a.coefficient.norm()));
  }
}

TEST(ScoreModel, ObjectiveValues) {
  const Eigen::MatrixXd X = pm_one();
  EXPECT_EQ(score_matching_objective({Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1)}, X, one()),
            0.0);
  const AffineMap identity{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1)};
  EXPECT_DOUBLE_EQ(score_matching_objective(identity, X, one(), TraceSign::Plus), 1.5);
  EXPECT_DOUBLE_EQ(score_matching_objective(identity, X, one(), TraceSign::Minus), -0.5);
}

TEST(ScoreModel, FitIsLocalMinimumOfObjective) {
  testsupport::Gen gen(12);
  for (int c = 0; c < 10; ++c) {
    const int n = gen.integer(1, 3);
    const Eigen::MatrixXd X =
        (gen.matrix(500, n) * gen.spd(n).llt().matrixU()).rowwise() + gen.vector(n).transpose();
    const Eigen::MatrixXd D = gen.spd(n);
    const AffineMap fit = as_affine_map(fit_affine_score(X, D));
    const double best = score_matching_objective(fit, X, D);
    for (int trial = 0; trial < 20; ++trial) {
      AffineMap b = fit;
      b.M += 0.1 * fit.M.norm() / n * gen.matrix(n, n);
      b.c += 0.1 * (1.0 + fit.c.norm()) / n * gen.vector(n);
      EXPECT_LE(best, score_matching_objective(b, X, D));
    }
  }
}

TEST(ScoreModel, AutoJitter) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(4, 4) * 2.0;
  EXPECT_DOUBLE_EQ(auto_jitter(cov), 2e-9);
  testsupport::Gen gen(1);
  const Eigen::MatrixXd X = gen.matrix(100, 2);
  EXPECT_EQ(fit_affine_score(X, Eigen::MatrixXd::Identity(2, 2), Jitter::Off).jitter, 0.0);
  EXPECT_GT(fit_affine_score(X, Eigen::MatrixXd::Identity(2, 2), Jitter::Auto).jitter, 0.0);
}
