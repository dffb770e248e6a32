// Serial reference kernels against the OpenMP versions.
#include "bsde/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace k = bsde::kernels;

namespace {

Eigen::MatrixXd noise(Eigen::Index r, Eigen::Index c, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d;
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) M(i, j) = d(g);
  return M;
}

k::EulerPlan plan(int n, int steps) {
  k::EulerPlan p;
  p.mean0 = Eigen::VectorXd::Ones(n);
  p.init_factor = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd M = -Eigen::MatrixXd::Identity(n, n) + 0.1 * noise(n, n, 3);
  p.drift.assign(steps, M);
  p.sigma = Eigen::MatrixXd::Identity(n, n);
  p.dt = 0.02;
  return p;
}

template <auto Fn>
void simulate(benchmark::State& s) {
  const auto p = plan(static_cast<int>(s.range(1)), 200);
  for (auto _ : s) benchmark::DoNotOptimize(Fn(p, static_cast<int>(s.range(0)), 7));
}

template <auto Fn>
void increments(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(Fn(static_cast<int>(s.range(0)), 200, 2, 0.02, 7));
}

template <auto Fn>
void normal_eq(benchmark::State& s) {
  const Eigen::MatrixXd F = noise(s.range(0), s.range(1), 1), Y = noise(s.range(0), 1, 2);
  for (auto _ : s) benchmark::DoNotOptimize(Fn(F, Y));
}

template <auto Fn>
void costs(benchmark::State& s) {
  const int n = 2, steps = 200;
  const auto paths = k::serial::simulate_paths(plan(n, steps), static_cast<int>(s.range(0)), 1);
  const std::vector<Eigen::MatrixXd> gains(steps, Eigen::MatrixXd::Constant(1, n, -0.5));
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n), R = Eigen::MatrixXd::Identity(1, 1);
  for (auto _ : s) benchmark::DoNotOptimize(Fn(paths.X, gains, I, R, I, 0.02));
}

}  // namespace

BENCHMARK(simulate<k::serial::simulate_paths>)->Args({2000, 2})->Args({1000, 20})->Unit(benchmark::kMillisecond);
BENCHMARK(simulate<k::simulate_paths>)->Args({2000, 2})->Args({1000, 20})->Unit(benchmark::kMillisecond);
BENCHMARK(increments<k::serial::gaussian_increments>)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(increments<k::gaussian_increments>)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(normal_eq<k::serial::normal_equations>)->Args({2000, 6})->Args({1000, 211})->Unit(benchmark::kMillisecond);
BENCHMARK(normal_eq<k::normal_equations>)->Args({2000, 6})->Args({1000, 211})->Unit(benchmark::kMillisecond);
BENCHMARK(costs<k::serial::path_costs>)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(costs<k::path_costs>)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
