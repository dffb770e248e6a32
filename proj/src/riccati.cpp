#include "bsde/riccati.hpp"

#include "bsde/csv.hpp"
#include "bsde/errors.hpp"

#include <cmath>

namespace bsde {
namespace {

struct RiccatiState {
  Eigen::MatrixXd G;
  double g;
};

// Right-hand side in reversed time s = T - t.
class RiccatiRhs {
 public:
  explicit RiccatiRhs(const LQProblem& prob)
      : A_(prob.A), Q_(prob.Q), S_(prob.B * prob.R.llt().solve(prob.B.transpose())),
        D_(prob.diffusion()) {}

  RiccatiState operator()(const RiccatiState& s) const {
    Eigen::MatrixXd GA = s.G * A_;
    return {GA + GA.transpose() + Q_ - s.G * S_ * s.G, 0.5 * (D_ * s.G).trace()};
  }

 private:
  Eigen::MatrixXd A_, Q_, S_, D_;
};

RiccatiState axpy(const RiccatiState& x, double h, const RiccatiState& d) {
  return {x.G + h * d.G, x.g + h * d.g};
}

}  // namespace

RiccatiSolution solve_riccati(const LQProblem& prob, const TimeGrid& grid, int refine) {
  if (refine < 1) throw Error(ErrorCode::InvalidArgument, "refine must be >= 1");
  const RiccatiRhs rhs(prob);
  const double h = grid.dt / refine;

  RiccatiSolution sol{grid, std::vector<Eigen::MatrixXd>(grid.steps + 1),
                      std::vector<double>(grid.steps + 1)};
  RiccatiState s{prob.Qf, 0.0};
  sol.G[grid.steps] = s.G;
  sol.g[grid.steps] = 0.0;

  for (int k = grid.steps; k > 0; --k) {
    for (int r = 0; r < refine; ++r) {
      const RiccatiState k1 = rhs(s);
      const RiccatiState k2 = rhs(axpy(s, 0.5 * h, k1));
      const RiccatiState k3 = rhs(axpy(s, 0.5 * h, k2));
      const RiccatiState k4 = rhs(axpy(s, h, k3));
      s.G += (h / 6.0) * (k1.G + 2.0 * k2.G + 2.0 * k3.G + k4.G);
      s.g += (h / 6.0) * (k1.g + 2.0 * k2.g + 2.0 * k3.g + k4.g);
      s.G = 0.5 * (s.G + s.G.transpose()).eval();
    }
    if (!s.G.allFinite() || !std::isfinite(s.g))
      throw Error(ErrorCode::NonFinite, "Riccati integration blew up");
    sol.G[k - 1] = s.G;
    sol.g[k - 1] = s.g;
  }
  return sol;
}

Eigen::MatrixXd optimal_gain(const LQProblem& prob, const RiccatiSolution& sol, int k) {
  return -prob.R.llt().solve(prob.B.transpose() * sol.G.at(k));
}

double exact_value(const LQProblem&, const RiccatiSolution& sol, int k, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(sol.G.at(k) * x) + sol.g.at(k);
}

Eigen::VectorXd exact_costate(const LQProblem&, const RiccatiSolution& sol, int k,
                              const Eigen::VectorXd& x) {
  return sol.G.at(k) * x;
}

double optimal_expected_cost(const LQProblem& prob, const RiccatiSolution& sol) {
  const Eigen::MatrixXd& G0 = sol.G.front();
  return 0.5 * prob.m0.dot(G0 * prob.m0) + 0.5 * (prob.Sigma0 * G0).trace() + sol.g.front();
}

void write_riccati_csv(std::ostream& out, const RiccatiSolution& sol) {
  const Eigen::Index n = sol.G.front().rows();
  CsvWriter csv(out);
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) header.push_back(matrix_entry_name("G", i, j));
  header.push_back("g");
  csv.header(header);
  for (int k = 0; k <= sol.grid.steps; ++k) {
    csv.field(sol.grid.time(k));
    csv.matrix_fields(sol.G[k]);
    csv.field(sol.g[k]);
    csv.end_row();
  }
}

}  // namespace bsde
