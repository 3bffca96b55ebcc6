#include "proxflow/continuous_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "proxflow/errors.hpp"

namespace proxflow {

std::string_view to_string(FlowStatus status) noexcept {
  switch (status) {
    case FlowStatus::Completed: return "Completed";
    case FlowStatus::Stabilized: return "Stabilized";
  }
  return "Unknown";
}

namespace {

// Evaluates the closed-loop field at x, carrying the lambda warm start between calls.
class ClosedLoopField {
 public:
  ClosedLoopField(const MonotoneOperator& op, double theta, const FlowConfig& cfg)
      : op_(op), theta_(theta) {
    opts_.rel_tol = cfg.rel_tol;
    opts_.resolvent_tol = cfg.resolvent_tol;
  }

  PhiEvaluation solve(const Vector& x) {
    PhiEvaluation eval = solve_lambda(op_, theta_, x, opts_);
    opts_.warm_start = eval.lambda;
    ++evaluations_;
    max_defect_ = std::max(max_defect_, std::abs(eval.phi - theta_) / theta_);
    return eval;
  }

  Vector operator()(const Vector& x) {
    const PhiEvaluation eval = solve(x);
    return eval.y - x;
  }

  long evaluations() const { return evaluations_; }
  double max_defect() const { return max_defect_; }

 private:
  const MonotoneOperator& op_;
  double theta_;
  LambdaSolveOptions opts_;
  long evaluations_ = 0;
  double max_defect_ = 0.0;
};

FlowState make_state(double t, const Vector& x, PhiEvaluation eval) {
  FlowState s;
  s.t = t;
  s.x = x;
  s.lambda = eval.lambda;
  s.speed = (eval.y - x).norm();
  s.y = std::move(eval.y);
  return s;
}

}  // namespace

Trajectory integrate(const MonotoneOperator& op, const Vector& x0, double theta,
                     const FlowConfig& cfg) {
  require_finite(x0, "x0");
  require_same_dim(x0.size(), op.dim(), "integrate");
  if (!(theta > 0.0)) throw Error(ErrorKind::ValidationError, "theta must be > 0");
  if (!(cfg.t_end > 0.0)) throw Error(ErrorKind::ValidationError, "t_end must be > 0");
  if (!(cfg.h > 0.0)) throw Error(ErrorKind::ValidationError, "h must be > 0");
  if (cfg.sample_stride < 1) throw Error(ErrorKind::ValidationError, "sample_stride must be >= 1");

  Trajectory traj;
  traj.theta = theta;
  ClosedLoopField field(op, theta, cfg);

  const long steps = static_cast<long>(std::ceil(cfg.t_end / cfg.h - 1e-9));
  Vector x = x0;
  // Raises ZeroResidual when x0 already solves the inclusion.
  PhiEvaluation head = field.solve(x);

  for (long n = 0;; ++n) {
    const double t = std::min(static_cast<double>(n) * cfg.h, cfg.t_end);
    FlowState state = make_state(t, x, head);
    const bool last = n == steps;
    const bool stabilized = state.speed < cfg.speed_floor;
    if (n % cfg.sample_stride == 0 || last || stabilized) {
      traj.samples.push_back(std::move(state));
    }
    if (stabilized) {
      traj.status = FlowStatus::Stabilized;
      break;
    }
    if (last) break;

    const double dt = std::min(cfg.h, cfg.t_end - t);
    try {
      const Vector k1 = head.y - x;
      const Vector k2 = field(x + 0.5 * dt * k1);
      const Vector k3 = field(x + 0.5 * dt * k2);
      const Vector k4 = field(x + dt * k3);
      x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      head = field.solve(x);
    } catch (const Error& e) {
      // A stage landed numerically on A^{-1}(0): the flow has stopped moving.
      if (e.kind() != ErrorKind::ZeroResidual) throw;
      traj.status = FlowStatus::Stabilized;
      break;
    }
  }

  const double lambda0 = traj.samples.front().lambda;
  const auto& pot = op.potential();
  for (const FlowState& s : traj.samples) {
    traj.tau.push_back(s.t + std::log(s.lambda / lambda0));
    if (pot && pot->value) {
      traj.fx.push_back(pot->value(s.x));
      traj.fy.push_back(pot->value(s.y));
    }
  }
  traj.max_constraint_defect = field.max_defect();
  traj.field_evaluations = field.evaluations();
  return traj;
}

namespace {

// Root of an increasing function g on the real line by Newton with a bisection
// safeguard; [lo, hi] must bracket the root.
template <typename G, typename DG>
double safeguarded_newton(G g, DG dg, double lo, double hi) {
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double val = g(u);
    if (val == 0.0) return u;
    (val < 0.0 ? lo : hi) = u;
    double next = u - val / dg(u);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(u))) {
      return next;
    }
    u = next;
  }
  return u;
}

}  // namespace

double isotropic_lambda_oracle(double alpha, double lambda0, double t) {
  if (!(alpha > 0.0) || !(lambda0 > 0.0)) {
    throw Error(ErrorKind::ValidationError, "isotropic oracle needs alpha, lambda0 > 0");
  }
  if (t == 0.0) return lambda0;
  // In u = ln lambda: alpha u - 2 e^{-u} = c. Since -2e^{-u} < 0 the root exceeds c/alpha,
  // and then u < (c + 2 e^{-c/alpha}) / alpha.
  const double c = alpha * t + alpha * std::log(lambda0) - 2.0 / lambda0;
  const double lo = c / alpha;
  const double hi = (c + 2.0 * std::exp(-lo)) / alpha;
  const double u = safeguarded_newton([&](double v) { return alpha * v - 2.0 * std::exp(-v) - c; },
                                      [&](double v) { return alpha + 2.0 * std::exp(-v); }, lo, hi);
  return std::exp(u);
}

double rotation_lambda_oracle(double lambda0, double t) {
  if (!(lambda0 > 0.0)) throw Error(ErrorKind::ValidationError, "rotation oracle needs lambda0 > 0");
  if (t == 0.0) return lambda0;
  const double c = t + lambda0 - 2.0 / lambda0;
  // lambda - 2/lambda = c: the root exceeds max(c, 0) and 2/(|c| + 2) and is below |c| + 2.
  const double lo = std::max(c, 2.0 / (std::abs(c) + 2.0));
  const double hi = std::abs(c) + 2.0;
  return safeguarded_newton([&](double l) { return l - 2.0 / l - c; },
                            [&](double l) { return 1.0 + 2.0 / (l * l); }, lo * (1.0 - 1e-12), hi);
}

double rotation_flow_lambda(double lambda0, double t) {
  if (!(lambda0 > 0.0)) throw Error(ErrorKind::ValidationError, "rotation law needs lambda0 > 0");
  if (t == 0.0) return lambda0;
  // u = ln lambda: u - e^{-2u} = c, root in (c, max(c, 0) + 1). For c < 0 also
  // e^{-2u} = u - c < 1 - c, so u > -ln(1 - c) / 2.
  const double c = t + std::log(lambda0) - 1.0 / (lambda0 * lambda0);
  const double lo = c < 0.0 ? std::max(c, -0.5 * std::log1p(-c)) : c;
  const double hi = std::max(c, 0.0) + 1.0;
  const double u = safeguarded_newton([&](double v) { return v - std::exp(-2.0 * v) - c; },
                                      [&](double v) { return 1.0 + 2.0 * std::exp(-2.0 * v); },
                                      lo, hi);
  return std::exp(u);
}

ExponentialFit fit_exponential(const std::vector<double>& t, const std::vector<double>& value) {
  ExponentialFit fit;
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0, syy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < t.size() && i < value.size(); ++i) {
    if (!(value[i] > 0.0)) continue;
    const double y = std::log(value[i]);
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
    syy += y * y;
    ++n;
  }
  fit.points = n;
  if (n < 2) return fit;
  const double cov = sty - st * sy / n;
  const double var_t = stt - st * st / n;
  const double var_y = syy - sy * sy / n;
  if (var_t <= 0.0) return fit;
  fit.rate = cov / var_t;
  fit.intercept = (sy - fit.rate * st) / n;
  fit.r_squared = var_y > 0.0 ? (cov * cov) / (var_t * var_y) : 1.0;
  return fit;
}

double FlowReport::max_hard_violation() const {
  double worst = 0.0;
  for (const FlowCheck& c : checks) {
    if (!c.soft) worst = std::max(worst, c.violation);
  }
  return worst;
}

bool FlowReport::all_hard_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const FlowCheck& c) { return c.soft || c.passed(); });
}

FlowReport flow_diagnostics(const Trajectory& traj, const MonotoneOperator& op,
                            const FlowDiagnosticsOptions& opts) {
  const auto& s = traj.samples;
  if (s.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "flow diagnostics need at least two samples");
  }
  const double theta = traj.theta;
  FlowReport r;

  const auto& zeros = op.known_zero_set();
  if (zeros) {
    r.d0 = zeros->distance(s.front().x);
  } else {
    r.d0 = (s.front().x - s.back().x).norm();
    r.d0_estimated = true;
  }

  // (a), (b): monotonicity and the e^{dt} caps. The caps over all pairs i < j reduce
  // to running extrema of ln lambda - t and ln speed + t.
  double min_g = std::numeric_limits<double>::infinity();
  double max_h = -std::numeric_limits<double>::infinity();
  double worst_g = -std::numeric_limits<double>::infinity();
  double worst_h = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) {
      r.lambda_monotonicity = std::max(r.lambda_monotonicity, s[i - 1].lambda - s[i].lambda);
      r.speed_monotonicity = std::max(r.speed_monotonicity, s[i].speed - s[i - 1].speed);
    }
    if (!(s[i].lambda > 0.0) || !(s[i].speed > 0.0)) continue;
    const double g = std::log(s[i].lambda) - s[i].t;
    const double h = std::log(s[i].speed) + s[i].t;
    if (std::isfinite(min_g)) {
      worst_g = std::max(worst_g, g - min_g);
      worst_h = std::max(worst_h, max_h - h);
    }
    min_g = std::min(min_g, g);
    max_h = std::max(max_h, h);
  }
  if (std::isfinite(worst_g)) r.lambda_growth_cap = std::max(0.0, std::expm1(worst_g));
  if (std::isfinite(worst_h)) r.speed_decay_cap = std::max(0.0, -std::expm1(-worst_h));

  if (r.d0 > 0.0) {
    for (const FlowState& st : s) {
      if (st.t <= 0.0) continue;
      const double root = std::sqrt(2.0 * st.t);
      r.speed_bound = std::max(r.speed_bound, st.speed - r.d0 / root);
      r.lambda_bound = std::max(r.lambda_bound, theta * root / r.d0 - st.lambda);
    }
  }

  // (f): distance to known zeros never grows.
  if (zeros) {
    std::vector<Vector> anchors{zeros->anchor};
    if (zeros->directions.cols() > 0) anchors.push_back(zeros->project(s.front().x));
    for (const Vector& z : anchors) {
      for (std::size_t i = 1; i < s.size(); ++i) {
        const double inc = (s[i].x - z).norm() - (s[i - 1].x - z).norm();
        r.zero_distance_monotonicity = std::max(r.zero_distance_monotonicity, inc);
      }
    }
  }

  // (c), (d): potential-based rate bounds.
  const auto fmin = op.known_min_value();
  if (!traj.fx.empty() && fmin && r.d0 > 0.0) {
    const double gap0 = traj.fx.front() - *fmin;
    if (gap0 > 0.0) {
      const double kappa = std::sqrt(theta / (r.d0 * r.d0 * r.d0));
      const double c2 = kappa * std::sqrt(gap0) / (2.0 + 3.0 * kappa * std::sqrt(gap0));
      double worst = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double grow = 1.0 + c2 * s[i].t;
        worst = std::max(worst, (traj.fx[i] - *fmin) * grow * grow / gap0);
      }
      r.f_bound_ratio = worst;
    }
    double integral = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
      const double a = s[i - 1].lambda * (traj.fy[i - 1] - *fmin);
      const double b = s[i].lambda * (traj.fy[i] - *fmin);
      integral += 0.5 * (a + b) * (s[i].t - s[i - 1].t);
    }
    r.integral_estimate = integral;
    r.integral_bound = 0.5 * r.d0 * r.d0;
  }

  // (e): exponential regime fits over the configured window.
  std::vector<double> wt, wl, wd;
  for (const FlowState& st : s) {
    if (st.t < opts.fit_t_begin || st.t > opts.fit_t_end) continue;
    wt.push_back(st.t);
    wl.push_back(st.lambda);
    if (zeros) wd.push_back(zeros->distance(st.x));
  }
  if (wt.size() >= 3) {
    r.lambda_fit = fit_exponential(wt, wl);
    if (zeros) r.distance_fit = fit_exponential(wt, wd);
  }

  const bool soft = r.d0_estimated;
  r.checks.push_back({"lambda_nondecreasing", r.lambda_monotonicity, 1e-9 * theta, false});
  r.checks.push_back({"lambda_growth_cap", r.lambda_growth_cap, 1e-6, false});
  r.checks.push_back({"speed_nonincreasing", r.speed_monotonicity, 1e-9 * theta, false});
  r.checks.push_back({"speed_decay_cap", r.speed_decay_cap, 1e-6, false});
  if (r.d0 > 0.0) {
    r.checks.push_back({"speed_le_d0_over_sqrt_2t", r.speed_bound, 1e-6, soft});
    r.checks.push_back({"lambda_ge_theta_sqrt_2t_over_d0", r.lambda_bound, 1e-6, soft});
  }
  if (zeros) {
    r.checks.push_back(
        {"zero_distance_nonincreasing", r.zero_distance_monotonicity, 1e-9 * (1.0 + r.d0), false});
  }
  if (r.f_bound_ratio) {
    r.checks.push_back({"f_rate_bound", std::max(0.0, *r.f_bound_ratio - 1.0), 1e-3, soft});
  }
  if (r.integral_estimate) {
    r.checks.push_back(
        {"lambda_gap_integral", std::max(0.0, *r.integral_estimate - *r.integral_bound), 1e-3, soft});
  }
  return r;
}

}  // namespace proxflow
