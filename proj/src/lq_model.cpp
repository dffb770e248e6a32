#include "bsde/lq_model.hpp"

#include "bsde/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bsde {
namespace {

constexpr double kSymmetryTol = 1e-8;
constexpr double kPsdTol = 1e-10;

void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

void require_shape(const Eigen::MatrixXd& M, Eigen::Index rows, Eigen::Index cols,
                   const char* name) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream os;
    os << name << " is " << M.rows() << "x" << M.cols() << ", expected " << rows << "x" << cols;
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
  require(M.allFinite(), ErrorCode::NonFinite, std::string(name) + " has non-finite entries");
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& M, const char* name) {
  const double asym = (M - M.transpose()).norm();
  require(asym <= kSymmetryTol * M.norm(), ErrorCode::NotSymmetric,
          std::string(name) + " is not symmetric");
  return 0.5 * (M + M.transpose());
}

Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& S) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues();
}

void require_psd(const Eigen::MatrixXd& S, const char* name) {
  if (S.size() == 0) return;
  const Eigen::VectorXd ev = eigenvalues(S);
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  require(ev.minCoeff() >= -kPsdTol * scale, ErrorCode::NonPSD,
          std::string(name) + " is not positive semidefinite");
}

void require_pd(const Eigen::MatrixXd& S, const char* name) {
  const Eigen::VectorXd ev = eigenvalues(S);
  require(ev.minCoeff() > 1e-14 * std::max(1.0, ev.maxCoeff()), ErrorCode::NonPD,
          std::string(name) + " is not positive definite");
}

nlohmann::json matrix_json(const Eigen::MatrixXd& M) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

double finite_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw Error(ErrorCode::InvalidArgument, key + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw Error(ErrorCode::NonFinite, key + ": non-finite value");
  return d;
}

// Accepts a nested array (matrix), a flat array (column vector) or a scalar (1x1).
Eigen::MatrixXd matrix_from_json(const nlohmann::json& root, const std::string& key) {
  if (!root.contains(key)) throw Error(ErrorCode::InvalidArgument, "missing key " + key);
  const auto& v = root.at(key);
  if (v.is_number()) return Eigen::MatrixXd::Constant(1, 1, finite_number(v, key));
  if (!v.is_array() || v.empty()) throw Error(ErrorCode::InvalidArgument, key + ": expected array");
  if (!v.front().is_array()) {
    Eigen::MatrixXd M(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) M(i, 0) = finite_number(v[i], key);
    return M;
  }
  const std::size_t cols = v.front().size();
  Eigen::MatrixXd M(v.size(), cols);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != cols)
      throw Error(ErrorCode::DimensionMismatch, key + ": ragged rows");
    for (std::size_t j = 0; j < cols; ++j) M(i, j) = finite_number(v[i][j], key);
  }
  return M;
}

}  // namespace

std::vector<double> TimeGrid::times() const {
  std::vector<double> t(steps + 1);
  for (int k = 0; k <= steps; ++k) t[k] = time(k);
  return t;
}

TimeGrid make_grid(double T, double dt) {
  require(std::isfinite(T) && T > 0.0, ErrorCode::InvalidGrid, "horizon must be positive");
  require(std::isfinite(dt) && dt > 0.0 && dt <= T, ErrorCode::InvalidGrid,
          "step must lie in (0, T]");
  const double ratio = T / dt;
  const double steps = std::round(ratio);
  require(std::abs(steps * dt - T) <= 1e-10 * T, ErrorCode::InvalidGrid,
          "T/dt must be an integer");
  return TimeGrid{T, static_cast<int>(steps), T / steps};
}

TimeGrid make_grid_nearest(double T, double dt) {
  require(std::isfinite(T) && T > 0.0, ErrorCode::InvalidGrid, "horizon must be positive");
  require(std::isfinite(dt) && dt > 0.0, ErrorCode::InvalidGrid, "step must be positive");
  const double steps = std::max(1.0, std::round(T / dt));
  require(steps < 1e8, ErrorCode::InvalidGrid, "too many steps");
  return TimeGrid{T, static_cast<int>(steps), T / steps};
}

LQProblem make_lq(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                  const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& Q,
                  const Eigen::MatrixXd& R, const Eigen::MatrixXd& Qf,
                  const Eigen::VectorXd& m0, const Eigen::MatrixXd& Sigma0, double T) {
  const Eigen::Index n = A.rows();
  require(n > 0, ErrorCode::DimensionMismatch, "empty state");
  require_shape(A, n, n, "A");
  const Eigen::Index m = B.cols();
  require(m > 0, ErrorCode::DimensionMismatch, "empty control");
  require_shape(B, n, m, "B");
  require_shape(sigma, n, n, "sigma");
  require_shape(Q, n, n, "Q");
  require_shape(R, m, m, "R");
  require_shape(Qf, n, n, "Qf");
  require_shape(m0, n, 1, "m0");
  require_shape(Sigma0, n, n, "Sigma0");
  require(std::isfinite(T) && T > 0.0, ErrorCode::InvalidArgument, "T must be positive");

  LQProblem prob{A, B, sigma, symmetrized(Q, "Q"), symmetrized(R, "R"), symmetrized(Qf, "Qf"),
                 m0, symmetrized(Sigma0, "Sigma0"), T};
  require_psd(prob.Q, "Q");
  require_psd(prob.Qf, "Qf");
  require_psd(prob.Sigma0, "Sigma0");
  require_pd(prob.R, "R");
  require(Eigen::FullPivLU<Eigen::MatrixXd>(sigma).isInvertible(), ErrorCode::SingularSigma,
          "sigma is singular");
  return prob;
}

LQProblem validated(const LQProblem& p) {
  return make_lq(p.A, p.B, p.sigma, p.Q, p.R, p.Qf, p.m0, p.Sigma0, p.T);
}

LQProblem builtin_2d() {
  Eigen::MatrixXd A(2, 2);
  A << 0.0, 1.0, -1.0, -0.1;
  Eigen::MatrixXd B(2, 1);
  B << 0.0, 1.0;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd m0(2);
  m0 << 1.0, 0.0;
  return make_lq(A, B, I, I, Eigen::MatrixXd::Identity(1, 1), I, m0, I, 4.0);
}

Eigen::MatrixXd toeplitz_stiffness(int p) {
  if (p < 1) throw Error(ErrorCode::InvalidArgument, "mass-spring needs p >= 1");
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    K(i, i) = 2.0;
    if (i + 1 < p) K(i, i + 1) = K(i + 1, i) = -1.0;
  }
  return K;
}

LQProblem mass_spring(int p, const std::optional<Eigen::VectorXd>& m0, double T) {
  const Eigen::MatrixXd K = toeplitz_stiffness(p);
  const int n = 2 * p;
  const Eigen::MatrixXd Ip = Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  A.topRightCorner(p, p) = Ip;
  A.bottomLeftCorner(p, p) = -K;
  A.bottomRightCorner(p, p) = -Ip;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, p);
  B.bottomRows(p) = Ip;
  const Eigen::MatrixXd In = Eigen::MatrixXd::Identity(n, n);
  return make_lq(A, B, In, In, Ip, In, m0.value_or(Eigen::VectorXd::Ones(n)), In, T);
}

ControlAffineParts control_affine_parts(const LQProblem& prob) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(prob.sigma);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularSigma, "sigma is singular");
  return ControlAffineParts{prob.A, lu.solve(prob.B)};
}

double running_cost(const LQProblem& prob, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  require(x.size() == prob.Q.rows() && u.size() == prob.R.rows(), ErrorCode::DimensionMismatch,
          "running_cost argument sizes");
  return 0.5 * x.dot(prob.Q * x) + 0.5 * u.dot(prob.R * u);
}

double terminal_cost(const LQProblem& prob, const Eigen::VectorXd& x) {
  require(x.size() == prob.Qf.rows(), ErrorCode::DimensionMismatch, "terminal_cost argument size");
  return 0.5 * x.dot(prob.Qf * x);
}

std::string problem_to_json(const LQProblem& prob) {
  nlohmann::json j;
  j["A"] = matrix_json(prob.A);
  j["B"] = matrix_json(prob.B);
  j["sigma"] = matrix_json(prob.sigma);
  j["Q"] = matrix_json(prob.Q);
  j["R"] = matrix_json(prob.R);
  j["Qf"] = matrix_json(prob.Qf);
  j["m0"] = std::vector<double>(prob.m0.data(), prob.m0.data() + prob.m0.size());
  j["Sigma0"] = matrix_json(prob.Sigma0);
  j["T"] = prob.T;
  return j.dump(2);
}

LQProblem problem_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("problem JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "problem JSON must be an object");
  const Eigen::MatrixXd m0 = matrix_from_json(j, "m0");
  if (m0.cols() != 1) throw Error(ErrorCode::DimensionMismatch, "m0 must be a vector");
  if (!j.contains("T")) throw Error(ErrorCode::InvalidArgument, "missing key T");
  return make_lq(matrix_from_json(j, "A"), matrix_from_json(j, "B"), matrix_from_json(j, "sigma"),
                 matrix_from_json(j, "Q"), matrix_from_json(j, "R"), matrix_from_json(j, "Qf"),
                 m0.col(0), matrix_from_json(j, "Sigma0"), finite_number(j.at("T"), "T"));
}

LQProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return problem_from_json(ss.str());
}

void save_problem(const LQProblem& prob, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << problem_to_json(prob) << '\n';
}

}  // namespace bsde
