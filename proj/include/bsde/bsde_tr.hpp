#pragma once

#include "bsde/bsde_lsmc.hpp"
#include "bsde/score_model.hpp"

#include <cstdint>
#include <vector>

namespace bsde {

/// States and Y-values of the reversed simulation, plus the backward
/// increments that drove it. noise[k] is the increment used for the step
/// k -> k-1 (noise[0] is empty).
struct ReversedBatch {
  std::vector<Eigen::MatrixXd> X;
  std::vector<Eigen::MatrixXd> Y;  // samples x 1 (Value) or samples x n (Costate)
  std::vector<Eigen::MatrixXd> noise;
  std::uint64_t seed_backward = 0;
};

/// x - (A + B K) x dt - b(x) dt - sigma dW.
Eigen::VectorXd reverse_step(const LQProblem& prob, const Eigen::MatrixXd& gain,
                             const AffineScore& score, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& dW, double dt);

/// c = tr(D d2phi) - dphi' b, component-wise for vector-valued phi.
Eigen::VectorXd correction_c(const QuadraticFn& phi, const AffineScore& score,
                             const Eigen::MatrixXd& D, const Eigen::VectorXd& x);
Eigen::VectorXd correction_c(const LinearFn& phi, const AffineScore& score,
                             const Eigen::MatrixXd& D, const Eigen::VectorXd& x);

/// One affine score per grid index 0..steps, fitted on the forward samples.
std::vector<AffineScore> fit_scores(const LQProblem& prob, const TrajectoryBatch& batch,
                                    Jitter jitter = Jitter::Off);

/// Time-reversal solve. The backward increments come from `seed_backward`,
/// independent of the forward noise; the same increment drives the state
/// and the Y update at each step.
ApproxSolution tr_solve(const LQProblem& prob, const ControlLaw& law,
                        const TrajectoryBatch& batch, const std::vector<AffineScore>& scores,
                        DriverKind kind, std::uint64_t seed_backward);

struct TrTrace {
  ApproxSolution solution;
  ReversedBatch reversed;
};

/// tr_solve that also returns the reversed simulation.
TrTrace tr_solve_traced(const LQProblem& prob, const ControlLaw& law,
                        const TrajectoryBatch& batch, const std::vector<AffineScore>& scores,
                        DriverKind kind, std::uint64_t seed_backward);

}  // namespace bsde
