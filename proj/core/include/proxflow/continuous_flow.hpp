#pragma once

#include <optional>
#include <string>
#include <vector>

#include "proxflow/lambda_solver.hpp"
#include "proxflow/operators.hpp"

namespace proxflow {

/// One sample of the closed-loop flow x' = J_{lambda(x)} x - x.
struct FlowState {
  double t = 0.0;
  Vector x;
  double lambda = 0.0;  // Lambda_theta(x)
  Vector y;             // J_lambda x
  double speed = 0.0;   // ||y - x|| = theta / lambda
};

struct FlowConfig {
  double h = 0.01;
  double t_end = 10.0;
  int sample_stride = 1;
  double speed_floor = 1e-12;
  double rel_tol = 1e-10;
  double resolvent_tol = kDefaultResolventTol;
};

enum class FlowStatus { Completed, Stabilized };

std::string_view to_string(FlowStatus status) noexcept;

struct Trajectory {
  double theta = 0.0;
  FlowStatus status = FlowStatus::Completed;
  std::vector<FlowState> samples;
  std::vector<double> tau;  // t + ln(lambda(t) / lambda(0))
  std::vector<double> fx;   // f(x(t)), empty without a potential
  std::vector<double> fy;   // f(y(t))
  /// max |lambda ||y - x|| - theta| / theta over every RK stage evaluation.
  double max_constraint_defect = 0.0;
  long field_evaluations = 0;
};

/// Classical RK4 with fixed step on x' = J_{Lambda_theta(x)} x - x. Each stage
/// solves for Lambda_theta warm-started from the previous stage.
Trajectory integrate(const MonotoneOperator& op, const Vector& x0, double theta,
                     const FlowConfig& cfg = {});

/// lambda(t) for A = alpha I, from alpha ln l - 2/l = alpha t + alpha ln l0 - 2/l0.
double isotropic_lambda_oracle(double alpha, double lambda0, double t);

/// lambda(t) for the planar rotation, from l - 2/l = t + l0 - 2/l0.
double rotation_lambda_oracle(double lambda0, double t);

/// lambda(t) for the planar rotation flow with theta fixed. Along the flow
/// lambda' = lambda^3 / (2 + lambda^2), i.e. ln l - 1/l^2 = t + ln l0 - 1/l0^2,
/// so lambda grows like e^t. rotation_lambda_oracle does not track this.
double rotation_flow_lambda(double lambda0, double t);

/// Least-squares line through (t, ln value).
struct ExponentialFit {
  double rate = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

ExponentialFit fit_exponential(const std::vector<double>& t, const std::vector<double>& value);

struct FlowCheck {
  std::string name;
  double violation = 0.0;  // >= 0; 0 means the property held exactly
  double tolerance = 0.0;
  bool soft = false;       // based on an estimated d0
  bool passed() const { return violation <= tolerance; }
};

struct FlowDiagnosticsOptions {
  double fit_t_begin = 2.0;
  double fit_t_end = 10.0;
};

struct FlowReport {
  double d0 = 0.0;
  bool d0_estimated = false;

  double lambda_monotonicity = 0.0;  // max decrease between consecutive samples
  double lambda_growth_cap = 0.0;    // max relative excess of lambda(t1) over e^{t1-t0} lambda(t0)
  double speed_monotonicity = 0.0;   // max increase between consecutive samples
  double speed_decay_cap = 0.0;      // max relative shortfall of speed(t1) below e^{-(t1-t0)} speed(t0)
  double speed_bound = 0.0;          // max excess of speed over d0 / sqrt(2t)
  double lambda_bound = 0.0;         // max shortfall of lambda below theta sqrt(2t) / d0
  double zero_distance_monotonicity = 0.0;  // max increase of ||x(t) - z||

  std::optional<double> f_bound_ratio;       // max (f(x)-f*)(1+C2 t)^2 / (f(x0)-f*)
  std::optional<double> integral_estimate;   // trapezoid of lambda (f(y) - f*)
  std::optional<double> integral_bound;      // d0^2 / 2
  std::optional<ExponentialFit> distance_fit;
  std::optional<ExponentialFit> lambda_fit;

  std::vector<FlowCheck> checks;

  /// Max violation over the hard (non-soft) checks.
  double max_hard_violation() const;
  bool all_hard_passed() const;
};

FlowReport flow_diagnostics(const Trajectory& traj, const MonotoneOperator& op,
                            const FlowDiagnosticsOptions& opts = {});

}  // namespace proxflow
