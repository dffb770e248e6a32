#include "bsde/policy_iteration.hpp"

#include "bsde/bsde_tr.hpp"
#include "bsde/csv.hpp"
#include "bsde/errors.hpp"
#include "bsde/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace bsde {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double max_gain_change(const std::vector<Eigen::MatrixXd>& a,
                       const std::vector<Eigen::MatrixXd>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    d = std::max(d, (a[k] - b[k]).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::LsV: return "LS-V";
    case Method::LsC: return "LS-C";
    case Method::TrV: return "TR-V";
    case Method::TrC: return "TR-C";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string s(name);
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s == "ls-v") return Method::LsV;
  if (s == "ls-c") return Method::LsC;
  if (s == "tr-v") return Method::TrV;
  if (s == "tr-c") return Method::TrC;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

DriverKind kind_of(Method m) {
  return (m == Method::LsV || m == Method::TrV) ? DriverKind::Value : DriverKind::Costate;
}

bool uses_time_reversal(Method m) { return m == Method::TrV || m == Method::TrC; }

ControlLaw extract_gain(const LQProblem& prob, const ApproxSolution& approx) {
  // Same map for both kinds: the value form goes through B~' sigma' = B', the
  // co-state form through the Hamiltonian minimizer R u + B' y = 0.
  const Eigen::LLT<Eigen::MatrixXd> R(prob.R);
  const Eigen::MatrixXd RinvBt = R.solve(prob.B.transpose());
  ControlLaw law;
  law.grid = approx.grid;
  law.gains.reserve(approx.grid.steps + 1);
  for (int k = 0; k <= approx.grid.steps; ++k) law.gains.push_back(-RinvBt * approx.matrix(k));
  return law;
}

bool IterationHistory::unstable() const {
  if (abort_iteration) return true;
  return std::any_of(iterations.begin(), iterations.end(),
                     [](const IterationRecord& r) { return r.unstable; });
}

double IterationHistory::final_mse() const {
  if (abort_iteration || !final_solution) return kNaN;
  for (auto it = iterations.rbegin(); it != iterations.rend(); ++it)
    if (!it->unstable) return it->mse;
  return kNaN;
}

double mse_vs_oracle(const std::vector<Eigen::MatrixXd>& G, const RiccatiSolution& oracle) {
  const int K = oracle.grid.steps;
  if (static_cast<int>(G.size()) != K + 1)
    throw Error(ErrorCode::InvalidGrid, "parameter sequence does not match the oracle grid");
  const double n = static_cast<double>(oracle.G.front().rows());
  double acc = 0.0;
  for (int k = 0; k < K; ++k) {
    if (!G[k].allFinite()) throw Error(ErrorCode::NonFinite, "non-finite G at index " + std::to_string(k));
    if (G[k].rows() != oracle.G[k].rows() || G[k].cols() != oracle.G[k].cols())
      throw Error(ErrorCode::DimensionMismatch, "G shape differs from the oracle");
    acc += (G[k] - oracle.G[k]).squaredNorm();
  }
  return acc * oracle.grid.dt / (oracle.grid.T * n * n);
}

double mse_vs_oracle(const ApproxSolution& approx, const RiccatiSolution& oracle) {
  if (!(approx.grid == oracle.grid))
    throw Error(ErrorCode::InvalidGrid, "approximation and oracle grids differ");
  std::vector<Eigen::MatrixXd> G;
  G.reserve(approx.grid.steps + 1);
  for (int k = 0; k <= approx.grid.steps; ++k) G.push_back(approx.matrix(k));
  return mse_vs_oracle(G, oracle);
}

IterationHistory run_policy_iteration(const LQProblem& prob, Method method,
                                      const PolicyIterationConfig& config) {
  return run_policy_iteration(prob, method, config,
                              solve_riccati(prob, config.grid, config.riccati_refine));
}

IterationHistory run_policy_iteration(const LQProblem& prob, Method method,
                                      const PolicyIterationConfig& config,
                                      const RiccatiSolution& oracle) {
  if (config.iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
  if (config.samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  if (!(oracle.grid == config.grid)) throw Error(ErrorCode::InvalidGrid, "oracle grid differs");

  IterationHistory hist;
  hist.method = method;
  hist.config = config;
  const DriverKind kind = kind_of(method);
  ControlLaw law = ControlLaw::zero(config.grid, prob.control_dim(), prob.state_dim());

  // The batch simulated at the top of iteration i + 1 runs under the law
  // extracted in iteration i, so it doubles as that law's cost sample.
  auto record_cost = [&](const TrajectoryBatch& batch) {
    if (hist.iterations.empty()) return;
    const CostEstimate cost = estimate_cost(prob, law, batch);
    hist.iterations.back().cost = cost.mean;
    hist.iterations.back().cost_se = cost.standard_error;
  };

  for (int it = 1; it <= config.iterations; ++it) {
    const TrajectoryBatch batch =
        simulate_forward(prob, law, config.samples, config.grid, derive_seed(config.seed, it, 0));
    record_cost(batch);
    if (batch.diverged) {
      if (!hist.iterations.empty()) hist.iterations.back().unstable = true;
      hist.abort_iteration = it;
      break;
    }

    IterationRecord rec;
    rec.iteration = it;
    rec.cost = rec.cost_se = kNaN;

    std::optional<ApproxSolution> sol;
    try {
      if (uses_time_reversal(method)) {
        const auto scores = fit_scores(prob, batch, config.jitter);
        sol = tr_solve(prob, law, batch, scores, kind, derive_seed(config.seed, it, 1));
      } else {
        sol = lsmc_solve(prob, law, batch, kind);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularCovariance && e.code() != ErrorCode::NonFinite &&
          e.code() != ErrorCode::TooFewSamples)
        throw;
      rec.note = e.what();
    }

    bool adopted = false;
    if (sol && !sol->flags.unstable && sol->finite()) {
      ControlLaw next = extract_gain(prob, *sol);
      if (next.finite()) {
        if (config.early_stop_tol && max_gain_change(next.gains, law.gains) < *config.early_stop_tol)
          hist.converged_early = true;
        law = std::move(next);
        rec.mse = mse_vs_oracle(*sol, oracle);
        hist.final_solution = std::move(sol);
        adopted = true;
      } else {
        rec.note = "non-finite gain";
      }
    } else if (sol) {
      rec.note = "solve aborted at step " + std::to_string(sol->flags.abort_step.value_or(-1));
    }
    if (!adopted) {
      rec.unstable = true;
      rec.mse = kNaN;
    }
    rec.gains = law.gains;
    hist.iterations.push_back(std::move(rec));

    if (it == config.iterations || hist.converged_early) {
      const TrajectoryBatch eval = simulate_forward(prob, law, config.samples, config.grid,
                                                    derive_seed(config.seed, it + 1, 0));
      record_cost(eval);
      if (eval.diverged) {
        hist.iterations.back().unstable = true;
        hist.abort_iteration = it;
      }
      break;
    }
  }
  return hist;
}

void write_history_csv(std::ostream& out, const IterationHistory& history) {
  CsvWriter w(out);
  w.header({"iter", "cost", "mse", "unstable_flag"});
  for (const auto& r : history.iterations) {
    w.field(r.iteration).field(r.cost).field(r.mse).field(r.unstable ? 1 : 0);
    w.end_row();
  }
}

}  // namespace bsde
