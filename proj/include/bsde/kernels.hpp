#pragma once

// Data-parallel inner loops. The functions in bsde::kernels are the OpenMP
// versions used by the library; bsde::kernels::serial holds straightforward
// time-major reference versions kept for tests and the benchmark.
//
// Per-sample work never depends on the thread schedule: random draws come
// from per-sample engines and reductions run over fixed-size chunks summed in
// chunk order. Output is therefore bit-identical for any thread count.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace bsde::kernels {

/// Linear Euler-Maruyama recursion x <- x + M_k x dt + sigma dW.
struct EulerPlan {
  Eigen::VectorXd mean0;
  Eigen::MatrixXd init_factor;         // L with L L' = Sigma0
  std::vector<Eigen::MatrixXd> drift;  // closed-loop A + B K_k, one per step
  Eigen::MatrixXd sigma;
  double dt = 0.0;
  double overflow_guard = 1e15;
};

struct PathSet {
  std::vector<Eigen::MatrixXd> X;      // [steps + 1] x (samples x n)
  std::vector<std::uint8_t> diverged;  // per sample; later states are NaN
};

/// Sample i draws n initial normals and then n normals per step from
/// sample_engine(seed, i).
PathSet simulate_paths(const EulerPlan& plan, int samples, std::uint64_t seed);

/// steps matrices of (samples x dim) N(0, dt) increments; sample i draws its
/// rows in step order from sample_engine(seed, i).
std::vector<Eigen::MatrixXd> gaussian_increments(int samples, int steps, int dim, double dt,
                                                 std::uint64_t seed);

/// One backward step of the reversed SDE, row-wise:
/// x <- x - M x dt - C (x - m) dt - sigma dW, where b(x) = C (x - m) is the score.
Eigen::MatrixXd reverse_euler_step(const Eigen::MatrixXd& X, const Eigen::MatrixXd& drift,
                                   const Eigen::MatrixXd& score_coef,
                                   const Eigen::VectorXd& score_mean, const Eigen::MatrixXd& sigma,
                                   double dt, const Eigen::MatrixXd& dW);

struct NormalEquations {
  Eigen::MatrixXd gram;  // F'F
  Eigen::MatrixXd rhs;   // F'Y
};

NormalEquations normal_equations(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Y);

/// Per-sample left-endpoint cost sum_k l(x_k, K_k x_k) dt + l_f(x_K).
Eigen::VectorXd path_costs(const std::vector<Eigen::MatrixXd>& X,
                           const std::vector<Eigen::MatrixXd>& gains, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& R, const Eigen::MatrixXd& Qf, double dt);

/// Row-block size of the chunked reduction in normal_equations.
inline constexpr Eigen::Index kReductionChunk = 256;

namespace serial {

PathSet simulate_paths(const EulerPlan& plan, int samples, std::uint64_t seed);
std::vector<Eigen::MatrixXd> gaussian_increments(int samples, int steps, int dim, double dt,
                                                 std::uint64_t seed);
Eigen::MatrixXd reverse_euler_step(const Eigen::MatrixXd& X, const Eigen::MatrixXd& drift,
                                   const Eigen::MatrixXd& score_coef,
                                   const Eigen::VectorXd& score_mean, const Eigen::MatrixXd& sigma,
                                   double dt, const Eigen::MatrixXd& dW);
NormalEquations normal_equations(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Y);
Eigen::VectorXd path_costs(const std::vector<Eigen::MatrixXd>& X,
                           const std::vector<Eigen::MatrixXd>& gains, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& R, const Eigen::MatrixXd& Qf, double dt);

}  // namespace serial
}  // namespace bsde::kernels
