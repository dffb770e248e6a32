#include "property_checks.hpp"

#include <gtest/gtest.h>

#include <filesystem>

TEST(Properties, ResidualOrthogonality) {
  const auto r = props::residual_orthogonality(101);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Properties, GradientFiniteDifferences) {
  const auto r = props::gradient_finite_differences(202);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Properties, ScoreCentering) {
  const auto r = props::score_centering(303);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Properties, ReversalMarginals) {
  const auto r = props::reversal_marginals(404);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Properties, TerminalExactness) {
  const auto r = props::terminal_exactness(505);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Properties, GainEquivalence) {
  const auto r = props::gain_equivalence(606);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Properties, PipelineDeterminism) {
  const auto dir = std::filesystem::temp_directory_path() / "bsde_props_determinism";
  const auto r = props::pipeline_determinism(dir.string());
  EXPECT_TRUE(r.pass) << r.detail;
}
