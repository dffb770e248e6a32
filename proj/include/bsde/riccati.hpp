#pragma once

#include "bsde/lq_model.hpp"

#include <Eigen/Dense>

#include <ostream>
#include <vector>

namespace bsde {

/// Exact LQ value function V(t,x) = 1/2 x'G_t x + g_t sampled on a grid.
struct RiccatiSolution {
  TimeGrid grid;
  std::vector<Eigen::MatrixXd> G;
  std::vector<double> g;
};

/// Integrates -dG/dt = GA + A'G + Q - G B R^{-1} B' G and -dg/dt = 1/2 tr(sigma sigma' G)
/// backward from (Qf, 0) with classical RK4, `refine` substeps per grid step.
/// G is symmetrized after every substep. Throws NonFinite on blow-up.
RiccatiSolution solve_riccati(const LQProblem& prob, const TimeGrid& grid, int refine = 20);

/// K_t = -R^{-1} B' G_t, so that u = K_t x.
Eigen::MatrixXd optimal_gain(const LQProblem& prob, const RiccatiSolution& sol, int k);

double exact_value(const LQProblem& prob, const RiccatiSolution& sol, int k, const Eigen::VectorXd& x);
Eigen::VectorXd exact_costate(const LQProblem& prob, const RiccatiSolution& sol, int k,
                              const Eigen::VectorXd& x);

/// E[V(0, X_0)] for X_0 ~ N(m0, Sigma0): 1/2 m0'G_0 m0 + 1/2 tr(Sigma0 G_0) + g_0.
double optimal_expected_cost(const LQProblem& prob, const RiccatiSolution& sol);

/// Columns: t, G[i][j] row-major, g.
void write_riccati_csv(std::ostream& out, const RiccatiSolution& sol);

}  // namespace bsde
