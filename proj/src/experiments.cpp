#include "bsde/experiments.hpp"

#include "bsde/csv.hpp"
#include "bsde/errors.hpp"
#include "bsde/riccati.hpp"
#include "bsde/rng.hpp"

#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace bsde {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, what);
}

// One policy-iteration run, reduced to what the writers need so that large
// sweeps do not hold every gain sequence in memory.
struct Job {
  const LQProblem* prob = nullptr;
  const RiccatiSolution* oracle = nullptr;
  Method method = Method::TrC;
  PolicyIterationConfig pi;
  int trial = 0;
  int point = 0;  // sweep grid index
  bool keep_solution = false;
};

struct JobOutput {
  TrialResult result;
  std::vector<IterationRecord> records;  // gains dropped
  std::optional<std::vector<Eigen::MatrixXd>> G;
  std::optional<std::vector<Eigen::MatrixXd>> gains;
};

JobOutput run_job(const Job& job) {
  IterationHistory hist = run_policy_iteration(*job.prob, job.method, job.pi, *job.oracle);
  JobOutput out;
  TrialResult& r = out.result;
  r.method = std::string(to_string(job.method));
  r.trial = job.trial;
  r.seed = job.pi.seed;
  r.unstable = hist.unstable();
  r.abort_iteration = hist.abort_iteration;
  r.mse = hist.final_mse();
  r.final_cost = hist.iterations.empty() ? kNaN : hist.iterations.back().cost;
  if (job.keep_solution && hist.final_solution && !hist.iterations.empty()) {
    std::vector<Eigen::MatrixXd> G;
    for (int k = 0; k <= hist.final_solution->grid.steps; ++k)
      G.push_back(hist.final_solution->matrix(k));
    out.G = std::move(G);
    out.gains = hist.iterations.back().gains;
  }
  for (auto& rec : hist.iterations) {
    rec.gains.clear();
    rec.gains.shrink_to_fit();
  }
  out.records = std::move(hist.iterations);
  return out;
}

std::vector<JobOutput> run_jobs(const std::vector<Job>& jobs, int threads) {
  std::vector<JobOutput> out(jobs.size());
  std::vector<std::string> errors(jobs.size());
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
  // Results are stored by job index, so scheduling never changes output order.
#pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    try {
      out[j] = run_job(jobs[j]);
    } catch (const std::exception& e) {
      errors[j] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
  return out;
}

std::vector<Method> parse_methods(const ExperimentConfig& config) {
  std::vector<Method> methods;
  for (const auto& name : config.methods) methods.push_back(parse_method(name));
  return methods;
}

fs::path prepare_out(const ExperimentConfig& config) {
  fs::path dir(config.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) bad_config("cannot create output directory '" + config.out + "'");
  return dir;
}

std::ofstream open_out(const fs::path& dir, const std::string& name, ExperimentSummary& summary) {
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) bad_config("cannot write '" + (dir / name).string() + "'");
  summary.files.push_back(name);
  return f;
}

void count(ExperimentSummary& s, const std::vector<JobOutput>& outs) {
  for (const auto& o : outs) {
    ++s.total_trials;
    if (o.result.unstable) ++s.unstable_trials;
  }
}

PolicyIterationConfig pi_config(const ExperimentConfig& c, int N, const TimeGrid& grid,
                                std::uint64_t seed) {
  PolicyIterationConfig pi;
  pi.samples = N;
  pi.grid = grid;
  pi.iterations = c.iters;
  pi.seed = seed;
  pi.jitter = c.jitter ? Jitter::Auto : Jitter::Off;
  return pi;
}

LQProblem problem_for(const ExperimentConfig& c) {
  LQProblem prob = resolve_problem(c.problem);
  if (c.T) {
    prob.T = *c.T;
    prob = validated(prob);
  }
  return prob;
}

void trial_row(CsvWriter& w, const TrialResult& r) {
  w.field(r.method).field(r.trial).field(r.seed).field(r.mse).field(r.unstable ? 1 : 0);
  w.field(r.abort_iteration ? *r.abort_iteration : 0).field(r.final_cost);
}

const std::vector<std::string> kTrialColumns{"method",   "trial",           "seed",
                                             "mse",      "unstable",        "abort_iteration",
                                             "final_cost"};

MeanStd stable_mse(const std::vector<const JobOutput*>& outs) {
  std::vector<double> v;
  for (const auto* o : outs)
    if (!o->result.unstable && std::isfinite(o->result.mse)) v.push_back(o->result.mse);
  return mean_std(v);
}

void write_matrix_trajectory_header(CsvWriter& w, std::vector<std::string> lead, Eigen::Index rows,
                                    Eigen::Index cols, const std::vector<std::string>& prefixes) {
  for (const auto& p : prefixes)
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) lead.push_back(matrix_entry_name(p, i, j));
  w.header(lead);
}

json manifest_base(const ExperimentConfig& config) {
  json m;
  m["command"] = std::string(to_string(config.experiment));
  m["config"] = json::parse(config_to_json(config));
  json seeds = json::array();
  for (int t = 0; t < config.trials; ++t) seeds.push_back(trial_seed(config.seed, t));
  m["trial_seeds"] = seeds;
  m["seed_derivation"] =
      "trial seed = derive_seed(master, trial); iteration i uses derive_seed(trial seed, i, s) "
      "with s = 0 forward, 1 backward; the cost of iteration i uses the forward batch of i + 1";
  return m;
}

void write_manifest(const fs::path& dir, json m, ExperimentSummary& summary) {
  summary.files.push_back("manifest.json");
  m["files"] = summary.files;
  m["total_trials"] = summary.total_trials;
  m["unstable_trials"] = summary.unstable_trials;
  std::ofstream f(dir / "manifest.json", std::ios::binary);
  if (!f) bad_config("cannot write manifest");
  f << m.dump(2) << '\n';
}

const char* kSweepIterNote =
    "sweep commands default to 50 policy iterations instead of 200 to bound runtime";

// Shared body of the three sweeps: one problem/grid/N per point.
struct SweepPoint {
  LQProblem prob;
  TimeGrid grid;
  int N = 0;
  std::vector<std::pair<std::string, double>> labels;  // leading CSV columns
};

ExperimentSummary run_sweep(const ExperimentConfig& config, const std::string& stem,
                            const std::vector<SweepPoint>& points, json manifest) {
  validate(config);
  const auto methods = parse_methods(config);
  const fs::path dir = prepare_out(config);

  std::vector<RiccatiSolution> oracles;
  oracles.reserve(points.size());
  for (const auto& p : points) oracles.push_back(solve_riccati(p.prob, p.grid));

  std::vector<Job> jobs;
  for (std::size_t pi = 0; pi < points.size(); ++pi)
    for (const Method m : methods)
      for (int t = 0; t < config.trials; ++t) {
        Job j;
        j.prob = &points[pi].prob;
        j.oracle = &oracles[pi];
        j.method = m;
        j.trial = t;
        j.point = static_cast<int>(pi);
        j.pi = pi_config(config, points[pi].N, points[pi].grid, trial_seed(config.seed, t));
        jobs.push_back(j);
      }
  const auto outs = run_jobs(jobs, config.threads);

  ExperimentSummary summary;
  count(summary, outs);

  std::vector<std::string> lead;
  for (const auto& [name, value] : points.front().labels) lead.push_back(name);
  {
    auto f = open_out(dir, stem + "_trials.csv", summary);
    CsvWriter w(f);
    std::vector<std::string> cols = lead;
    cols.insert(cols.end(), kTrialColumns.begin(), kTrialColumns.end());
    w.header(cols);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      for (const auto& [name, value] : points[jobs[j].point].labels) w.field(value);
      trial_row(w, outs[j].result);
      w.end_row();
    }
  }
  {
    auto f = open_out(dir, stem + "_summary.csv", summary);
    CsvWriter w(f);
    std::vector<std::string> cols = lead;
    for (const char* c : {"method", "stable_trials", "unstable_trials", "mse_mean", "mse_std"})
      cols.push_back(c);
    w.header(cols);
    for (std::size_t pi = 0; pi < points.size(); ++pi)
      for (const Method m : methods) {
        std::vector<const JobOutput*> sel;
        for (std::size_t j = 0; j < jobs.size(); ++j)
          if (jobs[j].point == static_cast<int>(pi) && jobs[j].method == m) sel.push_back(&outs[j]);
        const MeanStd ms = stable_mse(sel);
        for (const auto& [name, value] : points[pi].labels) w.field(value);
        w.field(to_string(m)).field(ms.count).field(static_cast<int>(sel.size()) - ms.count);
        w.field(ms.mean).field(ms.stddev);
        w.end_row();
      }
  }
  manifest["notes"].push_back(kSweepIterNote);
  write_manifest(dir, std::move(manifest), summary);
  return summary;
}

int parse_int(std::string_view s, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_config("invalid " + what + " '" + std::string(s) + "'");
  return v;
}

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    bad_config(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Table1: return "table1";
    case Experiment::SweepDt: return "sweep-dt";
    case Experiment::SweepN: return "sweep-n";
    case Experiment::SweepDim: return "sweep-dim";
    case Experiment::Solve: return "solve";
  }
  return "?";
}

Experiment parse_experiment(std::string_view name) {
  for (Experiment e : {Experiment::Table1, Experiment::SweepDt, Experiment::SweepN,
                       Experiment::SweepDim, Experiment::Solve})
    if (to_string(e) == name) return e;
  bad_config("unknown command '" + std::string(name) + "'");
}

ExperimentConfig default_config(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::Table1:
      break;
    case Experiment::SweepDt:
    case Experiment::SweepN:
    case Experiment::SweepDim:
      c.N = 1000;
      c.iters = 50;
      break;
    case Experiment::Solve:
      c.methods = {"tr-c"};
      c.trials = 1;
      break;
  }
  return c;
}

ExperimentConfig merge_config_json(const ExperimentConfig& base, std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    bad_config(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_config("config must be a JSON object");
  ExperimentConfig c = base;
  for (const auto& [key, value] : j.items()) {
    const char* k = key.c_str();
    if (key == "experiment") c.experiment = parse_experiment(get_as<std::string>(j, k));
    else if (key == "problem") c.problem = get_as<std::string>(j, k);
    else if (key == "methods") c.methods = get_as<std::vector<std::string>>(j, k);
    else if (key == "N") c.N = get_as<int>(j, k);
    else if (key == "dt") c.dt = get_as<double>(j, k);
    else if (key == "T") {
      if (value.is_null()) c.T.reset();
      else c.T = get_as<double>(j, k);
    }
    else if (key == "iters") c.iters = get_as<int>(j, k);
    else if (key == "trials") c.trials = get_as<int>(j, k);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(j, k);
    else if (key == "out") c.out = get_as<std::string>(j, k);
    else if (key == "jitter") c.jitter = get_as<bool>(j, k);
    else if (key == "threads") c.threads = get_as<int>(j, k);
    else if (key == "dt_grid") c.dt_grid = get_as<std::vector<double>>(j, k);
    else if (key == "N_grid") c.N_grid = get_as<std::vector<int>>(j, k);
    else if (key == "p_grid") c.p_grid = get_as<std::vector<int>>(j, k);
    else bad_config("unknown config key '" + key + "'");
  }
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = std::string(to_string(c.experiment));
  j["problem"] = c.problem;
  j["methods"] = c.methods;
  j["N"] = c.N;
  j["dt"] = c.dt;
  j["T"] = c.T ? json(*c.T) : json(nullptr);
  j["iters"] = c.iters;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["jitter"] = c.jitter;
  j["dt_grid"] = c.dt_grid;
  j["N_grid"] = c.N_grid;
  j["p_grid"] = c.p_grid;
  return j.dump(2);
}

void validate(const ExperimentConfig& c) {
  if (c.N < 1) bad_config("N must be positive");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) bad_config("dt must be positive");
  if (c.T && (!(*c.T > 0.0) || !std::isfinite(*c.T))) bad_config("T must be positive");
  if (c.iters < 1) bad_config("iters must be positive");
  if (c.trials < 1) bad_config("trials must be positive");
  if (c.threads < 0) bad_config("threads must be non-negative");
  if (c.methods.empty()) bad_config("methods must be nonempty");
  if (c.out.empty()) bad_config("out must be a directory path");
  for (const auto& m : c.methods) {
    if (c.experiment == Experiment::Solve && m == "oracle") continue;
    parse_method(m);
  }
  if (c.experiment == Experiment::Solve && c.methods.size() != 1)
    bad_config("solve takes exactly one method");
  if (c.experiment == Experiment::SweepDt) {
    if (c.dt_grid.empty()) bad_config("dt_grid must be nonempty");
    for (double d : c.dt_grid)
      if (!(d > 0.0) || !std::isfinite(d)) bad_config("dt_grid entries must be positive");
  }
  if (c.experiment == Experiment::SweepN) {
    if (c.N_grid.empty()) bad_config("N_grid must be nonempty");
    for (int n : c.N_grid)
      if (n < 1) bad_config("N_grid entries must be positive");
  }
  if (c.experiment == Experiment::SweepDim) {
    if (c.p_grid.empty()) bad_config("p_grid must be nonempty");
    for (int p : c.p_grid)
      if (p < 1) bad_config("p_grid entries must be positive");
  }
}

LQProblem resolve_problem(std::string_view source) {
  if (source == "builtin-2d") return builtin_2d();
  constexpr std::string_view ms = "mass-spring:";
  if (source.substr(0, ms.size()) == ms) {
    const int p = parse_int(source.substr(ms.size()), "mass-spring size");
    if (p < 1) bad_config("mass-spring size must be positive");
    return mass_spring(p);
  }
  try {
    return load_problem(std::string(source));
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("problem '") + std::string(source) + "': " + e.what());
  }
}

std::uint64_t trial_seed(std::uint64_t master, int trial) {
  return derive_seed(master, static_cast<std::uint64_t>(trial));
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd r;
  r.count = static_cast<int>(values.size());
  if (values.empty()) {
    r.mean = r.stddev = kNaN;
    return r;
  }
  double s = 0.0;
  for (double v : values) s += v;
  r.mean = s / values.size();
  if (values.size() < 2) {
    r.stddev = kNaN;
    return r;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(ss / (values.size() - 1));
  return r;
}

ExperimentSummary cmd_table1(const ExperimentConfig& config) {
  validate(config);
  const auto methods = parse_methods(config);
  const LQProblem prob = problem_for(config);
  const TimeGrid grid = make_grid(prob.T, config.dt);
  const RiccatiSolution oracle = solve_riccati(prob, grid);
  const fs::path dir = prepare_out(config);

  std::vector<Job> jobs;
  for (const Method m : methods)
    for (int t = 0; t < config.trials; ++t) {
      Job j;
      j.prob = &prob;
      j.oracle = &oracle;
      j.method = m;
      j.trial = t;
      j.pi = pi_config(config, config.N, grid, trial_seed(config.seed, t));
      j.keep_solution = true;
      jobs.push_back(j);
    }
  auto outs = run_jobs(jobs, config.threads);

  ExperimentSummary summary;
  count(summary, outs);
  {
    auto f = open_out(dir, "table1_trials.csv", summary);
    CsvWriter w(f);
    w.header(kTrialColumns);
    for (const auto& o : outs) {
      trial_row(w, o.result);
      w.end_row();
    }
  }
  {
    auto f = open_out(dir, "table1_summary.csv", summary);
    CsvWriter w(f);
    w.header({"method", "stable_trials", "unstable_trials", "mse_mean", "mse_std"});
    for (const Method m : methods) {
      std::vector<const JobOutput*> sel;
      for (std::size_t j = 0; j < jobs.size(); ++j)
        if (jobs[j].method == m) sel.push_back(&outs[j]);
      const MeanStd ms = stable_mse(sel);
      w.field(to_string(m)).field(ms.count).field(static_cast<int>(sel.size()) - ms.count);
      w.field(ms.mean).field(ms.stddev);
      w.end_row();
    }
  }
  {
    auto f = open_out(dir, "table1_costs.csv", summary);
    CsvWriter w(f);
    w.header({"method", "trial", "iter", "cost", "cost_se", "mse", "unstable_flag"});
    for (const auto& o : outs)
      for (const auto& r : o.records) {
        w.field(o.result.method).field(o.result.trial).field(r.iteration).field(r.cost);
        w.field(r.cost_se).field(r.mse).field(r.unstable ? 1 : 0);
        w.end_row();
      }
  }
  {
    // Final G_t of the first stable trial of each method against G*_t.
    auto f = open_out(dir, "table1_G.csv", summary);
    CsvWriter w(f);
    const Eigen::Index n = prob.state_dim();
    write_matrix_trajectory_header(w, {"method", "trial", "t"}, n, n, {"G", "Gstar"});
    for (const Method m : methods) {
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].method != m || outs[j].result.unstable || !outs[j].G) continue;
        for (int k = 0; k <= grid.steps; ++k) {
          w.field(outs[j].result.method).field(outs[j].result.trial).field(grid.time(k));
          w.matrix_fields((*outs[j].G)[k]).matrix_fields(oracle.G[k]);
          w.end_row();
        }
        break;
      }
    }
  }
  json manifest = manifest_base(config);
  manifest["effective_T"] = prob.T;
  manifest["oracle_expected_cost"] = optimal_expected_cost(prob, oracle);
  write_manifest(dir, std::move(manifest), summary);
  return summary;
}

ExperimentSummary cmd_sweep_dt(const ExperimentConfig& config) {
  validate(config);
  const LQProblem prob = problem_for(config);
  std::vector<SweepPoint> points;
  json manifest = manifest_base(config);
  for (double d : config.dt_grid) {
    const TimeGrid grid = make_grid_nearest(prob.T, d);
    points.push_back({prob, grid, config.N, {{"dt", d}, {"dt_effective", grid.dt}}});
    if (std::abs(grid.dt - d) > 1e-10 * d) {
      std::ostringstream note;
      note << "dt=" << d << " does not divide T=" << prob.T << "; using " << grid.steps
           << " steps of " << std::setprecision(17) << grid.dt;
      manifest["notes"].push_back(note.str());
    }
  }
  return run_sweep(config, "sweep_dt", points, std::move(manifest));
}

ExperimentSummary cmd_sweep_n(const ExperimentConfig& config) {
  validate(config);
  const LQProblem prob = problem_for(config);
  const TimeGrid grid = make_grid(prob.T, config.dt);
  std::vector<SweepPoint> points;
  for (int N : config.N_grid) points.push_back({prob, grid, N, {{"N", static_cast<double>(N)}}});
  return run_sweep(config, "sweep_n", points, manifest_base(config));
}

ExperimentSummary cmd_sweep_dim(const ExperimentConfig& config) {
  validate(config);
  std::vector<SweepPoint> points;
  for (int p : config.p_grid) {
    LQProblem prob = mass_spring(p);
    if (config.T) {
      prob.T = *config.T;
      prob = validated(prob);
    }
    const TimeGrid grid = make_grid(prob.T, config.dt);
    points.push_back({prob, grid, config.N,
                      {{"p", static_cast<double>(p)}, {"n", static_cast<double>(2 * p)}}});
  }
  json manifest = manifest_base(config);
  manifest["notes"].push_back("mse is normalized by n^2");
  return run_sweep(config, "sweep_dim", points, std::move(manifest));
}

ExperimentSummary cmd_solve(const ExperimentConfig& config) {
  validate(config);
  const LQProblem prob = problem_for(config);
  const TimeGrid grid = make_grid(prob.T, config.dt);
  const RiccatiSolution oracle = solve_riccati(prob, grid);
  const fs::path dir = prepare_out(config);
  ExperimentSummary summary;
  json manifest = manifest_base(config);
  manifest["oracle_expected_cost"] = optimal_expected_cost(prob, oracle);

  if (config.methods.front() == "oracle") {
    auto f = open_out(dir, "solve_riccati.csv", summary);
    write_riccati_csv(f, oracle);
    write_manifest(dir, std::move(manifest), summary);
    return summary;
  }

  Job job;
  job.prob = &prob;
  job.oracle = &oracle;
  job.method = parse_method(config.methods.front());
  job.pi = pi_config(config, config.N, grid, trial_seed(config.seed, 0));
  job.keep_solution = true;
  const auto outs = run_jobs({job}, config.threads);
  const JobOutput& o = outs.front();
  count(summary, outs);

  const Eigen::Index n = prob.state_dim();
  const Eigen::Index m = prob.control_dim();
  {
    auto f = open_out(dir, "solve_G.csv", summary);
    CsvWriter w(f);
    write_matrix_trajectory_header(w, {"t"}, n, n, {"G", "Gstar"});
    if (o.G)
      for (int k = 0; k <= grid.steps; ++k) {
        w.field(grid.time(k)).matrix_fields((*o.G)[k]).matrix_fields(oracle.G[k]);
        w.end_row();
      }
  }
  {
    auto f = open_out(dir, "solve_gains.csv", summary);
    CsvWriter w(f);
    write_matrix_trajectory_header(w, {"t"}, m, n, {"K", "Kstar"});
    if (o.gains)
      for (int k = 0; k <= grid.steps; ++k) {
        w.field(grid.time(k)).matrix_fields((*o.gains)[k]).matrix_fields(optimal_gain(prob, oracle, k));
        w.end_row();
      }
  }
  {
    auto f = open_out(dir, "solve_history.csv", summary);
    IterationHistory h;
    h.method = job.method;
    h.iterations = o.records;
    write_history_csv(f, h);
  }
  manifest["final_mse"] = o.result.mse;
  manifest["unstable"] = o.result.unstable;
  write_manifest(dir, std::move(manifest), summary);
  return summary;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  switch (config.experiment) {
    case Experiment::Table1: return cmd_table1(config);
    case Experiment::SweepDt: return cmd_sweep_dt(config);
    case Experiment::SweepN: return cmd_sweep_n(config);
    case Experiment::SweepDim: return cmd_sweep_dim(config);
    case Experiment::Solve: return cmd_solve(config);
  }
  bad_config("unknown command");
}

}  // namespace bsde
