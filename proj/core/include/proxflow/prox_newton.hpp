#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proxflow/operators.hpp"

namespace proxflow {

/// s = -(hess f(x) + I/lambda)^{-1} grad f(x), i.e. one Newton step on
/// lambda grad f(y) + y - x = 0 from y = x.
Vector newton_step(const Potential& f, const Vector& x, double lambda);

struct LambdaSelection {
  double lambda = 0.0;
  Vector step;
  double band_value = 0.0;  // lambda ||step||
  double hessian_norm = 0.0;
  int evaluations = 0;      // shifted solves spent on the search
  double sandwich_violation = 0.0;  // worst breach of the step-norm sandwich, relative
};

/// Log-lambda bisection for 2 sigma_l / L <= lambda ||s(lambda)|| <= 2 sigma_u / L.
LambdaSelection select_lambda(const Potential& f, const Vector& x, double sigma_l, double sigma_u,
                              double L, std::optional<double> warm_start = std::nullopt);

struct NewtonConfig {
  double sigma_l = 0.1;
  double sigma_u = 0.9;
  double L = 0.0;  // required, > 0
  double grad_tol = 1e-10;
  int max_iter = 1000;
  bool warm_start = true;
};

struct NewtonIterate {
  int k = 0;
  Vector x;
  double grad_norm = 0.0;  // at x
  double lambda = 0.0;
  Vector step;
  double band_value = 0.0;
  double hessian_norm = 0.0;  // at the previous iterate, where the step was built
  int bisections = 0;
  double f = 0.0;
  double sandwich_violation = 0.0;
};

/// Slacks (rhs - lhs) of the three conditions that make the proximal-Newton step an
/// admissible large-step proximal step with sigma = sigma_u, theta = 2 sigma_l / L.
struct EmbeddingVerdict {
  double a_slack = 0.0;  // sigma ||x_k - x_{k-1}|| - ||lambda_k grad f(x_k) + x_k - x_{k-1}||
  double b_slack = 0.0;  // lambda_k ||x_k - x_{k-1}|| - theta
  std::optional<double> c_slack;  // lambda_k - sqrt(sigma_l / ((1 + sigma_u) sigma_u)) lambda_{k-1}
};

enum class NewtonStatus { Converged, MaxIter, ZeroGradient };

std::string_view to_string(NewtonStatus status) noexcept;

struct NewtonRun {
  NewtonConfig config;
  Vector x0;
  double f0 = 0.0;
  double grad0 = 0.0;
  std::vector<NewtonIterate> iterates;
  std::vector<EmbeddingVerdict> embedding;  // parallel to iterates
  std::vector<double> quad_ratios;          // ||x_k - x*|| / ||x_{k-1} - x*||^2
  std::optional<Vector> x_star;
  NewtonStatus status = NewtonStatus::MaxIter;
};

NewtonRun run_prox_newton(const MonotoneOperator& op, const Vector& x0, const NewtonConfig& cfg);

struct IterationBounds {
  double K = 0.0;  // f(x_k) - f* <= eps for all k >= K
  double J = 0.0;  // some j <= 2 ceil(J) has ||grad f(x_j)|| <= eps
};

IterationBounds iteration_bounds(double f0_gap, double sigma_l, double sigma_u, double L, double D0,
                                 double eps);

/// (M'L/2) [1 + (1/sigma_l)(1 + (M'L/2) ||s*||)^2], the contraction constant of the
/// quadratic-convergence estimate.
double quadratic_rate_constant(double m_prime, double L, double sigma_l, double s_star_norm);

/// Samples ||hess f(u) - hess f(w)|| / ||u - w|| over random pairs in a ball around x0
/// and multiplies the maximum by `safety`.
double estimate_hessian_lipschitz(const Potential& f, const Vector& x0, double radius, int samples,
                                  std::uint64_t seed, double safety = 2.0);

}  // namespace proxflow
