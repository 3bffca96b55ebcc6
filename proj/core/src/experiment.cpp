#include "proxflow/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "proxflow/continuous_flow.hpp"
#include "proxflow/errors.hpp"
#include "proxflow/lambda_solver.hpp"
#include "proxflow/large_step_pp.hpp"
#include "proxflow/prox_newton.hpp"

#ifndef PROXFLOW_PROVENANCE
#define PROXFLOW_PROVENANCE "proxflow 0.1.0"
#endif

namespace proxflow {

namespace {

// Tolerances on summary.max_invariant_violation per command.
constexpr double kFlowTolerance = 1e-6;
constexpr double kIterationTolerance = 1e-9;

// Floor for an estimated Hessian-Lipschitz constant (quadratics estimate to 0).
constexpr double kMinEstimatedL = 1e-6;
constexpr int kLEstimateSamples = 64;

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& names) {
    for (const auto& n : names) text(n);
    end_row();
  }
  CsvWriter& num(double v) {
    sep();
    out_ << fmt::format("{:.17g}", v);
    return *this;
  }
  CsvWriter& num(long v) {
    sep();
    out_ << v;
    return *this;
  }
  CsvWriter& opt(const std::optional<double>& v) {
    if (v) return num(*v);
    sep();
    return *this;
  }
  CsvWriter& text(std::string_view s) {
    sep();
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
      out_ << s;
      return *this;
    }
    out_ << '"';
    for (char c : s) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
    return *this;
  }
  void end_row() {
    out_ << '\n';
    first_ = true;
    ++rows_;
  }
  long rows() const { return rows_; }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }

  std::ostream& out_;
  bool first_ = true;
  long rows_ = 0;
};

double shortfall(double slack) { return std::max(0.0, -slack); }

std::vector<std::string> indexed(std::string_view prefix, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(fmt::format("{}_{}", prefix, i));
  return out;
}

RunSummary run_flow(const ExperimentConfig& cfg, const MonotoneOperator& op, std::ostream& csv) {
  FlowConfig fc;
  fc.h = cfg.h;
  fc.t_end = cfg.t_end;
  fc.sample_stride = cfg.sample_stride;
  fc.rel_tol = cfg.rel_tol;

  CsvWriter w(csv);
  std::vector<std::string> cols{"t", "lambda", "speed", "tau"};
  for (auto& c : indexed("x", cfg.x0.size())) cols.push_back(std::move(c));
  const bool has_f = op.potential() && op.potential()->value;
  if (has_f) {
    cols.push_back("f_x");
    cols.push_back("f_y");
  }
  w.header(cols);

  RunSummary sum;
  sum.tolerance = kFlowTolerance;
  Trajectory traj;
  try {
    traj = integrate(op, cfg.x0, cfg.theta, fc);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ZeroResidual) throw;
    sum.status = std::string(to_string(FlowStatus::Stabilized));
    sum.final_gap = 0.0;
    return sum;
  }
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const FlowState& s = traj.samples[i];
    w.num(s.t).num(s.lambda).num(s.speed).num(traj.tau[i]);
    for (Eigen::Index j = 0; j < s.x.size(); ++j) w.num(s.x[j]);
    if (has_f) w.num(traj.fx[i]).num(traj.fy[i]);
    w.end_row();
  }
  sum.rows = w.rows() - 1;
  sum.status = std::string(to_string(traj.status));

  double worst = traj.max_constraint_defect;
  if (traj.samples.size() >= 2) {
    const FlowReport rep = flow_diagnostics(traj, op);
    worst = std::max(worst, rep.max_hard_violation());
  }
  sum.max_invariant_violation = worst;

  const Vector& x_end = traj.samples.back().x;
  if (has_f && op.known_min_value()) {
    sum.final_gap = traj.fx.back() - *op.known_min_value();
  } else if (op.known_zero_set()) {
    sum.final_gap = op.known_zero_set()->distance(x_end);
  }
  return sum;
}

RunSummary run_pp_command(const ExperimentConfig& cfg, const MonotoneOperator& op,
                          std::ostream& csv) {
  PPConfig pc;
  pc.theta = cfg.theta;
  pc.sigma = cfg.sigma;
  pc.max_iter = cfg.max_iter;
  pc.grad_tol = cfg.grad_tol;
  pc.lambda_rel_tol = cfg.rel_tol;
  const PPRun run = run_pp(op, cfg.x0, pc);

  CsvWriter w(csv);
  w.header({"k", "lambda", "step_norm", "v_norm", "eq_residual", "f_x", "rate_bound",
            "bound_slack"});
  RunSummary sum;
  sum.tolerance = kIterationTolerance;
  double worst = 0.0;
  for (std::size_t i = 0; i < run.iterates.size(); ++i) {
    const PPIterate& it = run.iterates[i];
    const PPStepChecks& c = run.checks[i];
    w.num(static_cast<long>(it.k))
        .num(it.cert.lambda)
        .num(it.cert.step_norm)
        .num(it.cert.v.norm())
        .num(it.cert.eq_residual)
        .num(it.f)
        .opt(c.rate_bound)
        .opt(c.rate_slack);
    w.end_row();
    worst = std::max({worst, shortfall(c.descent_slack), shortfall(c.step_ratio_lower_slack),
                      shortfall(c.step_ratio_upper_slack), shortfall(c.max_bound_slack)});
    if (c.rate_slack) worst = std::max(worst, shortfall(*c.rate_slack));
    const CertificateVerdict v = check_certificate(it.cert, pc.sigma, pc.theta);
    worst = std::max({worst, shortfall(v.relative_error_slack), shortfall(v.large_step_slack)});
  }
  sum.rows = w.rows() - 1;
  sum.status = std::string(to_string(run.status));
  sum.max_invariant_violation = worst;
  if (run.constants.f_star) {
    const double f_last = run.iterates.empty() ? run.f0 : run.iterates.back().f;
    sum.final_gap = f_last - *run.constants.f_star;
  }
  return sum;
}

RunSummary run_newton_command(const ExperimentConfig& cfg, const MonotoneOperator& op,
                              std::ostream& csv) {
  NewtonConfig nc;
  nc.sigma_l = cfg.sigma_l;
  nc.sigma_u = cfg.sigma_u;
  nc.grad_tol = cfg.grad_tol;
  nc.max_iter = cfg.max_iter;
  if (cfg.L) {
    nc.L = *cfg.L;
  } else {
    const double radius = std::max(1.0, cfg.x0.norm());
    nc.L = std::max(kMinEstimatedL, estimate_hessian_lipschitz(*op.potential(), cfg.x0, radius,
                                                               kLEstimateSamples, cfg.seed));
  }
  const NewtonRun run = run_prox_newton(op, cfg.x0, nc);

  CsvWriter w(csv);
  w.header({"k", "lambda", "band_value", "grad_norm", "step_norm", "f_x", "bisection_count",
            "embed_a_slack", "embed_b_slack", "embed_c_slack"});
  RunSummary sum;
  sum.tolerance = kIterationTolerance;
  const double lo = 2.0 * nc.sigma_l / nc.L;
  const double hi = 2.0 * nc.sigma_u / nc.L;
  double worst = 0.0;
  for (std::size_t i = 0; i < run.iterates.size(); ++i) {
    const NewtonIterate& it = run.iterates[i];
    const EmbeddingVerdict& e = run.embedding[i];
    w.num(static_cast<long>(it.k))
        .num(it.lambda)
        .num(it.band_value)
        .num(it.grad_norm)
        .num(it.step.norm())
        .num(it.f)
        .num(static_cast<long>(it.bisections))
        .num(e.a_slack)
        .num(e.b_slack)
        .opt(e.c_slack);
    w.end_row();
    worst = std::max({worst, shortfall(e.a_slack), shortfall(e.b_slack),
                      std::max(0.0, lo - it.band_value) / hi,
                      std::max(0.0, it.band_value - hi) / hi, it.sandwich_violation});
    if (e.c_slack) worst = std::max(worst, shortfall(*e.c_slack));
  }
  sum.rows = w.rows() - 1;
  sum.status = std::string(to_string(run.status));
  sum.max_invariant_violation = worst;
  if (op.known_min_value()) {
    const double f_last = run.iterates.empty() ? run.f0 : run.iterates.back().f;
    sum.final_gap = f_last - *op.known_min_value();
  }
  return sum;
}

RunSummary run_lambda_command(const ExperimentConfig& cfg, const MonotoneOperator& op,
                              std::ostream& csv, std::ostream* trace) {
  std::vector<LambdaBracket> brackets;
  LambdaSolveOptions opts;
  opts.rel_tol = cfg.rel_tol;
  opts.trace = &brackets;

  CsvWriter w(csv);
  w.header({"theta", "lambda", "gamma", "phi"});
  RunSummary sum;
  sum.tolerance = cfg.rel_tol;
  try {
    const PhiEvaluation ev = solve_lambda(op, cfg.theta, cfg.x0, opts);
    w.num(cfg.theta).num(ev.lambda).num(1.0 / ev.lambda).num(ev.phi);
    sum.status = "Solved";
    sum.max_invariant_violation = std::abs(ev.phi - cfg.theta) / cfg.theta;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ZeroResidual) throw;
    w.num(cfg.theta).num(std::numeric_limits<double>::infinity()).num(0.0).num(0.0);
    sum.status = "ZeroSet";
  }
  w.end_row();
  sum.rows = 1;
  if (op.known_zero_set()) sum.final_gap = op.known_zero_set()->distance(cfg.x0);

  if (trace) {
    CsvWriter t(*trace);
    t.header({"step", "lambda_lo", "lambda_hi", "phi_lo", "phi_hi"});
    for (std::size_t i = 0; i < brackets.size(); ++i) {
      const LambdaBracket& b = brackets[i];
      t.num(static_cast<long>(i)).num(b.lambda_lo).num(b.lambda_hi).num(b.phi_lo).num(b.phi_hi);
      t.end_row();
    }
  }
  return sum;
}

std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::ValidationError, fmt::format("cannot write '{}'", path));
  return out;
}

std::string default_path(const ExperimentConfig& cfg) {
  return cfg.output_path.empty() ? fmt::format("proxflow-{}.csv", to_string(cfg.command))
                                 : cfg.output_path;
}

}  // namespace

bool RunSummary::success() const {
  static const std::set<std::string> ok{"Converged", "Stabilized", "ZeroGradient", "Completed",
                                        "Solved", "ZeroSet"};
  return ok.count(status) > 0 && max_invariant_violation <= tolerance;
}

std::string provenance() { return PROXFLOW_PROVENANCE; }

std::string trace_path_for(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".trace.csv");
  return p.string();
}

RunSummary run_to_stream(const ExperimentConfig& cfg, std::ostream& csv, std::ostream* trace) {
  validate(cfg);
  const MonotoneOperator op = build_operator(cfg.op, static_cast<int>(cfg.x0.size()));
  switch (cfg.command) {
    case Command::Flow: return run_flow(cfg, op, csv);
    case Command::PP: return run_pp_command(cfg, op, csv);
    case Command::Newton: return run_newton_command(cfg, op, csv);
    case Command::Lambda: return run_lambda_command(cfg, op, csv, trace);
  }
  throw Error(ErrorKind::ValidationError, "unknown command");
}

ReportEnvelope run_experiment(const ExperimentConfig& cfg) {
  ReportEnvelope env;
  env.config = cfg;
  env.config_echo = render(cfg);
  env.provenance = provenance();
  env.csv_path = default_path(cfg);

  const auto start = std::chrono::steady_clock::now();
  std::ofstream csv = open_output(env.csv_path);
  if (cfg.command == Command::Lambda) {
    env.trace_path = trace_path_for(env.csv_path);
    std::ofstream trace = open_output(env.trace_path);
    env.summary = run_to_stream(cfg, csv, &trace);
  } else {
    env.summary = run_to_stream(cfg, csv);
  }
  env.summary.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return env;
}

std::vector<ReportEnvelope> run_experiments(const std::vector<ExperimentConfig>& grid,
                                            int workers) {
  std::set<std::string> paths;
  for (const auto& cfg : grid) {
    if (!paths.insert(default_path(cfg)).second) {
      throw Error(ErrorKind::ValidationError,
                  fmt::format("output path '{}' used by more than one run", default_path(cfg)));
    }
  }
  std::vector<ReportEnvelope> out(grid.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        out[i] = run_experiment(grid[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(grid.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace proxflow
