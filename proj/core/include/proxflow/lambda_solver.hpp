#pragma once

#include <optional>
#include <vector>

#include "proxflow/operators.hpp"

namespace proxflow {

/// phi(lambda, x) = lambda ||x - J_lambda x||, with the resolvent pair kept.
struct PhiEvaluation {
  double lambda = 0.0;
  double phi = 0.0;
  Vector y;
  Vector v;
};

/// [lambda_lo, lambda_hi] with phi_lo <= target <= phi_hi.
struct LambdaBracket {
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  double phi_lo = 0.0;
  double phi_hi = 0.0;
};

/// Which side of the target the accepted evaluation may fall on.
enum class LambdaSide {
  Nearest,  // |phi - theta| <= rel_tol theta
  AtLeast,  // theta <= phi <= (1 + rel_tol) theta
  AtMost,   // (1 - rel_tol) theta <= phi <= theta
};

struct LambdaSolveOptions {
  double rel_tol = 1e-10;
  double resolvent_tol = kDefaultResolventTol;
  /// Probe point; defaults to 1.
  std::optional<double> warm_start;
  LambdaSide side = LambdaSide::Nearest;
  /// When set, every bracket visited is appended here.
  std::vector<LambdaBracket>* trace = nullptr;
};

inline constexpr int kMaxLambdaBisections = 200;

/// Threshold on phi(1, x) below which x is treated as a zero of A.
double zero_tolerance(const Vector& x);

PhiEvaluation phi(const MonotoneOperator& op, double lambda, const Vector& x,
                  double resolvent_tol = kDefaultResolventTol);

/// Solves phi(lambda, x) = theta. Raises ZeroResidual when x is numerically a zero.
PhiEvaluation solve_lambda(const MonotoneOperator& op, double theta, const Vector& x,
                           const LambdaSolveOptions& opts = {});

/// 1 / Lambda_theta(x), or 0 on the zero set.
double gamma(const MonotoneOperator& op, double theta, const Vector& x,
             const LambdaSolveOptions& opts = {});

/// The lambda-interval on which target_lo <= phi(lambda, x) <= target_hi.
LambdaBracket bracket_for_band(const MonotoneOperator& op, const Vector& x, double target_lo,
                               double target_hi, const LambdaSolveOptions& opts = {});

}  // namespace proxflow
