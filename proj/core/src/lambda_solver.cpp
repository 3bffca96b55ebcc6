#include "proxflow/lambda_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "proxflow/errors.hpp"

namespace proxflow {

double zero_tolerance(const Vector& x) { return 1e-13 * (1.0 + x.norm()); }

PhiEvaluation phi(const MonotoneOperator& op, double lambda, const Vector& x,
                  double resolvent_tol) {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::BadLambda, "phi needs lambda >= 0");
  if (lambda == 0.0) {
    return PhiEvaluation{0.0, 0.0, x, Vector::Zero(x.size())};
  }
  ResolventResult r = resolvent(op, lambda, x, resolvent_tol);
  const double value = lambda * (x - r.y).norm();
  return PhiEvaluation{lambda, value, std::move(r.y), std::move(r.v)};
}

namespace {

bool accepted(double value, double theta, const LambdaSolveOptions& opts) {
  switch (opts.side) {
    case LambdaSide::Nearest: return std::abs(value - theta) <= opts.rel_tol * theta;
    case LambdaSide::AtLeast: return value >= theta && value <= (1.0 + opts.rel_tol) * theta;
    case LambdaSide::AtMost: return value <= theta && value >= (1.0 - opts.rel_tol) * theta;
  }
  return false;
}

// Nearest-mode solves keep refining past rel_tol; the sandwich slope makes a
// phi residual of rel_tol worth up to rel_tol in lambda.
bool settled(double value, double theta, const LambdaSolveOptions& opts) {
  if (opts.side != LambdaSide::Nearest) return accepted(value, theta, opts);
  return std::abs(value - theta) <= 1e-3 * opts.rel_tol * theta;
}

}  // namespace

PhiEvaluation solve_lambda(const MonotoneOperator& op, double theta, const Vector& x,
                           const LambdaSolveOptions& opts) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw Error(ErrorKind::ValidationError, "solve_lambda needs theta > 0");
  }
  if (!(opts.rel_tol > 0.0)) throw Error(ErrorKind::ValidationError, "rel_tol must be > 0");

  PhiEvaluation unit = phi(op, 1.0, x, opts.resolvent_tol);
  if (unit.phi <= zero_tolerance(x)) {
    throw Error(ErrorKind::ZeroResidual, "x is numerically a zero of the operator");
  }

  double probe = opts.warm_start.value_or(1.0);
  if (!(probe > 0.0) || !std::isfinite(probe)) probe = 1.0;
  PhiEvaluation first = probe == 1.0 ? std::move(unit) : phi(op, probe, x, opts.resolvent_tol);
  if (!(first.phi > 0.0)) {
    // Warm start so small that phi underflowed; fall back to the unit probe.
    first = phi(op, 1.0, x, opts.resolvent_tol);
  }
  if (settled(first.phi, theta, opts)) return first;

  // phi(mu) lies between (mu/l) phi(l) and (mu/l)^2 phi(l), so with r = theta/phi(l)
  // the root is in [l min(r, sqrt r), l max(r, sqrt r)].
  // Either way the far end of that interval is l r.
  const double other = first.lambda * theta / first.phi;
  PhiEvaluation lo;
  PhiEvaluation hi;
  std::optional<PhiEvaluation> best;
  auto keep = [&](const PhiEvaluation& e) {
    if (accepted(e.phi, theta, opts) &&
        (!best || std::abs(e.phi - theta) < std::abs(best->phi - theta))) {
      best = e;
    }
  };
  keep(first);
  if (first.phi < theta) {
    lo = std::move(first);
    hi = phi(op, other, x, opts.resolvent_tol);
    keep(hi);
  } else {
    hi = std::move(first);
    lo = phi(op, other, x, opts.resolvent_tol);
    keep(lo);
  }
  int steps = 0;
  // Inner-solver noise can put the sandwich endpoint on the wrong side; widen geometrically.
  while (lo.phi > theta && steps < kMaxLambdaBisections) {
    if (settled(lo.phi, theta, opts)) return lo;
    hi = std::move(lo);
    lo = phi(op, hi.lambda * 0.5, x, opts.resolvent_tol);
    keep(lo);
    ++steps;
  }
  while (hi.phi < theta && steps < kMaxLambdaBisections) {
    if (settled(hi.phi, theta, opts)) return hi;
    lo = std::move(hi);
    hi = phi(op, lo.lambda * 2.0, x, opts.resolvent_tol);
    keep(hi);
    ++steps;
  }
  if (settled(lo.phi, theta, opts)) return lo;
  if (settled(hi.phi, theta, opts)) return hi;

  const double log_theta = std::log(theta);
  bool force_bisect = false;
  for (; steps < kMaxLambdaBisections; ++steps) {
    if (opts.trace) {
      opts.trace->push_back(LambdaBracket{lo.lambda, hi.lambda, lo.phi, hi.phi});
    }
    const double a = std::log(lo.lambda);
    const double b = std::log(hi.lambda);
    if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), 1.0)) {
      break;
    }
    double u = 0.5 * (a + b);
    if (!force_bisect && lo.phi > 0.0) {
      // log phi is close to affine in log lambda (slope between 1 and 2).
      const double fa = std::log(lo.phi);
      const double fb = std::log(hi.phi);
      if (fb > fa) {
        const double s = a + (log_theta - fa) * (b - a) / (fb - fa);
        const double margin = 1e-3 * (b - a);
        if (s > a + margin && s < b - margin) u = s;
      }
    }
    const double width = b - a;
    PhiEvaluation mid = phi(op, std::exp(u), x, opts.resolvent_tol);
    keep(mid);
    if (settled(mid.phi, theta, opts)) return mid;
    if (mid.phi < theta) {
      lo = std::move(mid);
    } else {
      hi = std::move(mid);
    }
    // Fall back to a plain halving whenever a secant step failed to halve the bracket.
    force_bisect = !force_bisect && (std::log(hi.lambda) - std::log(lo.lambda)) > 0.5 * width;
  }
  if (best) return *best;
  throw Error(ErrorKind::NoConvergence,
              "solve_lambda: bracket [" + std::to_string(lo.lambda) + ", " +
                  std::to_string(hi.lambda) + "] did not reach the tolerance");
}

double gamma(const MonotoneOperator& op, double theta, const Vector& x,
             const LambdaSolveOptions& opts) {
  if (!(theta > 0.0)) throw Error(ErrorKind::ValidationError, "gamma needs theta > 0");
  if (phi(op, 1.0, x, opts.resolvent_tol).phi <= zero_tolerance(x)) return 0.0;
  return 1.0 / solve_lambda(op, theta, x, opts).lambda;
}

LambdaBracket bracket_for_band(const MonotoneOperator& op, const Vector& x, double target_lo,
                               double target_hi, const LambdaSolveOptions& opts) {
  if (!(target_lo > 0.0) || !(target_hi >= target_lo)) {
    throw Error(ErrorKind::ValidationError, "bracket_for_band needs 0 < target_lo <= target_hi");
  }
  LambdaSolveOptions lower = opts;
  LambdaSolveOptions upper = opts;
  if (target_lo < target_hi) {
    lower.side = LambdaSide::AtLeast;
    upper.side = LambdaSide::AtMost;
  }
  const PhiEvaluation left = solve_lambda(op, target_lo, x, lower);
  upper.warm_start = left.lambda * std::sqrt(target_hi / target_lo);
  const PhiEvaluation right = solve_lambda(op, target_hi, x, upper);
  return LambdaBracket{left.lambda, right.lambda, left.phi, right.phi};
}

}  // namespace proxflow
