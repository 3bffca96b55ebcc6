#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "proxflow/operators.hpp"

namespace proxflow {

/// (lambda, y, v, epsilon) produced by one inexact proximal step from x_prev.
struct ProxCertificate {
  double lambda = 0.0;
  Vector y;
  Vector v;
  double epsilon = 0.0;
  double eq_residual = 0.0;  // ||lambda v + y - x_prev||
  double step_norm = 0.0;    // ||y - x_prev||
};

/// Slacks are rhs - lhs, so a non-negative slack means the inequality holds.
struct CertificateVerdict {
  bool inclusion = false;
  bool relative_error = false;
  bool large_step = false;
  double inclusion_slack = 0.0;
  double relative_error_slack = 0.0;
  double large_step_slack = 0.0;

  bool all() const { return inclusion && relative_error && large_step; }
};

CertificateVerdict check_certificate(const ProxCertificate& cert, double sigma, double theta);

struct PPConfig {
  double theta = 1.0;
  double sigma = 0.1;
  int max_iter = 1000;
  double grad_tol = 1e-10;
  /// Tolerance on phi(lambda, x) = theta for the closed-loop lambda choice.
  double lambda_rel_tol = 1e-10;
  double resolvent_tol = kDefaultResolventTol;
  /// Optional open-loop schedule lambda_k = schedule(k, x_{k-1}); the closed-loop
  /// choice Lambda_theta(x_{k-1}) is used when empty.
  std::function<double(int k, const Vector& x_prev)> lambda_schedule;
};

struct PPStep {
  Vector x_next;
  ProxCertificate cert;
  CertificateVerdict verdict;
};

/// Step (1) of the large-step method. Raises ZeroGradient when x_prev is already a solution.
PPStep pp_step(const MonotoneOperator& op, const Vector& x_prev, const PPConfig& cfg, int k = 1);

enum class PPStatus { Converged, MaxIter, ZeroGradient };

std::string_view to_string(PPStatus status) noexcept;

struct PPIterate {
  int k = 0;
  Vector x;
  ProxCertificate cert;
  double f = 0.0;
};

/// Per-iteration slacks of the descent inequalities (non-negative when they hold).
struct PPStepChecks {
  double descent_slack = 0.0;          // f(x_{k-1}) - f(x_k) - lambda/2 |v|^2 - (1-s^2)/(2 lambda) |dx|^2
  double step_ratio_lower_slack = 0.0; // |lambda v| - (1 - s)|dx|
  double step_ratio_upper_slack = 0.0; // (1 + s)|dx| - |lambda v|
  double max_bound_slack = 0.0;        // lhs of the descent split minus |v|^{3/2} sqrt(theta (1 - s))
  std::optional<double> rate_bound;    // f0_gap / [1 + k kappa0 sqrt(g0) / (2 + 3 kappa0 sqrt(g0))]^2
  std::optional<double> rate_slack;    // rate_bound - (f(x_k) - f*)
};

struct PPConstants {
  std::optional<double> f_star;
  double D0 = 0.0;
  bool D0_estimated = false;
  double kappa0 = 0.0;
  double D_hat = 0.0;
  double kappa = 0.0;
};

struct PPRun {
  PPConfig config;
  Vector x0;
  double f0 = 0.0;
  std::vector<PPIterate> iterates;
  std::vector<PPStepChecks> checks;  // parallel to iterates
  PPConstants constants;
  PPStatus status = PPStatus::MaxIter;

  /// Partial sums of 1/lambda_k^3.
  std::vector<double> inverse_cube_partial_sums() const;
  /// min ||v_j|| over j in {k/2+1, ..., k}; requires k even and k <= iterates.size().
  double window_min_residual(int k_even) const;
};

PPRun run_pp(const MonotoneOperator& op, const Vector& x0, const PPConfig& cfg);

/// f0_gap / [1 + k kappa sqrt(f0_gap) / (2 + 3 kappa sqrt(f0_gap))]^2.
double rate_bound(double f0_gap, double kappa, int k);

/// Bound on min ||v_j|| over j in {k/2+1, ..., k}. Raises BadK unless k is even and >= 2.
double residual_window_bound(double f0_gap, double kappa, double theta, double sigma, int k_even);

/// Outcome of checking the discrete decay lemma on a sequence.
struct DecayLemmaVerdict {
  bool hypotheses_hold = false;
  bool conclusion_holds = false;
  std::string reason;

  explicit operator bool() const { return hypotheses_hold && conclusion_holds; }
};

/// For a_k <= a_{k-1} - tau a_{k-1}^{3/2} with tau sqrt(a_0) <= 1, checks
/// a_k <= a_0 / [1 + k tau sqrt(a_0) / 2]^2.
DecayLemmaVerdict decay_lemma_check(const std::vector<double>& a, double tau);

}  // namespace proxflow
