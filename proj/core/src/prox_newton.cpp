#include "proxflow/prox_newton.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "proxflow/errors.hpp"

namespace proxflow {

std::string_view to_string(NewtonStatus status) noexcept {
  switch (status) {
    case NewtonStatus::Converged: return "Converged";
    case NewtonStatus::MaxIter: return "MaxIter";
    case NewtonStatus::ZeroGradient: return "ZeroGradient";
  }
  return "Unknown";
}

Vector newton_step(const Potential& f, const Vector& x, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::BadLambda, "newton_step needs lambda > 0");
  const Vector g = f.gradient(x);
  if (g.norm() == 0.0) return Vector::Zero(x.size());
  return shifted_solve(f.hessian(x), 1.0 / lambda, -g);
}

namespace {

void validate_band(double sigma_l, double sigma_u, double L) {
  if (!(sigma_l > 0.0 && sigma_l < sigma_u && sigma_u < 1.0)) {
    throw Error(ErrorKind::ValidationError, "need 0 < sigma_l < sigma_u < 1");
  }
  if (!(L > 0.0) || !std::isfinite(L)) {
    throw Error(ErrorKind::ValidationError, "Hessian-Lipschitz constant L must be > 0");
  }
}

struct BandPoint {
  double lambda;
  Vector step;
  double value;
};

}  // namespace

LambdaSelection select_lambda(const Potential& f, const Vector& x, double sigma_l, double sigma_u,
                              double L, std::optional<double> warm_start) {
  validate_band(sigma_l, sigma_u, L);
  const Vector g = f.gradient(x);
  const double gnorm = g.norm();
  if (gnorm == 0.0 || !std::isfinite(gnorm)) {
    throw Error(ErrorKind::ZeroGradient, "select_lambda at a stationary point");
  }
  const Matrix h = f.hessian(x);
  const double hnorm = operator_norm_estimate(h);
  const double target_lo = 2.0 * sigma_l / L;
  const double target_hi = 2.0 * sigma_u / L;

  LambdaSelection out;
  out.hessian_norm = hnorm;
  auto evaluate = [&](double lambda) {
    Vector s = shifted_solve(h, 1.0 / lambda, -g);
    const double sn = s.norm();
    ++out.evaluations;
    // lambda |g| / (lambda |H| + 1) <= |s| <= lambda |g|.
    const double upper = lambda * gnorm;
    const double lower = upper / (lambda * hnorm + 1.0);
    const double breach = std::max(lower - sn, sn - upper) / upper;
    out.sandwich_violation = std::max(out.sandwich_violation, std::max(0.0, breach));
    return BandPoint{lambda, std::move(s), lambda * sn};
  };
  auto in_band = [&](const BandPoint& p) { return p.value >= target_lo && p.value <= target_hi; };
  auto finish = [&](BandPoint p) {
    out.lambda = p.lambda;
    out.band_value = p.value;
    out.step = std::move(p.step);
    return out;
  };

  // Outer bracket: lambda_l >= sqrt(target_lo / |g|) and
  // lambda_u <= (|H| s_u / L + sqrt((|H| s_u / L)^2 + 2 |g| s_u / L)) / |g|.
  const double a = hnorm * sigma_u / L;
  double lo_lambda = std::sqrt(target_lo / gnorm);
  double hi_lambda = (a + std::sqrt(a * a + 2.0 * gnorm * sigma_u / L)) / gnorm;

  std::optional<BandPoint> lo;
  std::optional<BandPoint> hi;
  if (warm_start && *warm_start > 0.0 && std::isfinite(*warm_start)) {
    BandPoint w = evaluate(std::clamp(*warm_start, lo_lambda, hi_lambda));
    if (in_band(w)) return finish(std::move(w));
    if (w.value < target_lo) {
      lo = std::move(w);
    } else {
      hi = std::move(w);
    }
  }
  if (!lo) {
    lo = evaluate(lo_lambda);
    if (in_band(*lo)) return finish(std::move(*lo));
  }
  if (!hi) {
    hi = evaluate(hi_lambda);
    if (in_band(*hi)) return finish(std::move(*hi));
  }
  // The outer bounds rely on an estimated |H|; widen if rounding left them on the wrong side.
  for (int i = 0; i < 60 && lo->value > target_hi; ++i) {
    hi = std::move(lo);
    lo = evaluate(hi->lambda * 0.25);
    if (in_band(*lo)) return finish(std::move(*lo));
  }
  for (int i = 0; i < 60 && hi->value < target_lo; ++i) {
    lo = std::move(hi);
    hi = evaluate(lo->lambda * 4.0);
    if (in_band(*hi)) return finish(std::move(*hi));
  }

  for (int it = 0; it < 200; ++it) {
    BandPoint mid = evaluate(std::sqrt(lo->lambda * hi->lambda));
    if (in_band(mid)) return finish(std::move(mid));
    if (mid.value < target_lo) {
      lo = std::move(mid);
    } else {
      hi = std::move(mid);
    }
  }
  throw Error(ErrorKind::NoConvergence, "select_lambda: band not reached after 200 bisections");
}

NewtonRun run_prox_newton(const MonotoneOperator& op, const Vector& x0, const NewtonConfig& cfg) {
  validate_band(cfg.sigma_l, cfg.sigma_u, cfg.L);
  require_finite(x0, "x0");
  require_same_dim(x0.size(), op.dim(), "run_prox_newton");
  if (!(cfg.grad_tol > 0.0)) throw Error(ErrorKind::ValidationError, "grad_tol must be > 0");
  const auto& pot = op.potential();
  if (!pot || !pot->value || !pot->gradient || !pot->hessian) {
    throw Error(ErrorKind::ValidationError, "the proximal-Newton method needs a C2 potential");
  }
  const Potential& f = *pot;

  NewtonRun run;
  run.config = cfg;
  run.x0 = x0;
  run.f0 = f.value(x0);
  run.grad0 = f.gradient(x0).norm();
  if (op.known_zero_set() && op.known_zero_set()->directions.cols() == 0) {
    run.x_star = op.known_zero_set()->anchor;
  }

  const double theta = 2.0 * cfg.sigma_l / cfg.L;
  const double c_factor = std::sqrt(cfg.sigma_l / ((1.0 + cfg.sigma_u) * cfg.sigma_u));
  Vector x = x0;
  double grad_norm = run.grad0;
  std::optional<double> prev_lambda;
  run.status = NewtonStatus::MaxIter;
  for (int k = 1;; ++k) {
    if (grad_norm <= cfg.grad_tol) {
      run.status = k == 1 ? NewtonStatus::ZeroGradient : NewtonStatus::Converged;
      break;
    }
    if (k > cfg.max_iter) break;

    LambdaSelection sel = select_lambda(f, x, cfg.sigma_l, cfg.sigma_u, cfg.L,
                                        cfg.warm_start ? prev_lambda : std::nullopt);
    Vector next = x + sel.step;
    const Vector g_next = f.gradient(next);

    NewtonIterate it;
    it.k = k;
    it.grad_norm = g_next.norm();
    it.lambda = sel.lambda;
    it.band_value = sel.band_value;
    it.hessian_norm = sel.hessian_norm;
    it.bisections = sel.evaluations;
    it.f = f.value(next);
    it.sandwich_violation = sel.sandwich_violation;

    EmbeddingVerdict ev;
    const double dx = sel.step.norm();
    ev.a_slack = cfg.sigma_u * dx - (sel.lambda * g_next + sel.step).norm();
    ev.b_slack = sel.lambda * dx - theta;
    if (prev_lambda) ev.c_slack = sel.lambda - c_factor * *prev_lambda;

    if (run.x_star) {
      const double before = (x - *run.x_star).norm();
      const double after = (next - *run.x_star).norm();
      if (before > 0.0) run.quad_ratios.push_back(after / (before * before));
    }

    it.step = std::move(sel.step);
    it.x = next;
    run.iterates.push_back(std::move(it));
    run.embedding.push_back(ev);
    prev_lambda = sel.lambda;
    x = std::move(next);
    grad_norm = run.iterates.back().grad_norm;
  }
  return run;
}

IterationBounds iteration_bounds(double f0_gap, double sigma_l, double sigma_u, double L, double D0,
                                 double eps) {
  validate_band(sigma_l, sigma_u, L);
  if (!(D0 > 0.0) || !(eps > 0.0) || !(f0_gap >= 0.0)) {
    throw Error(ErrorKind::ValidationError, "iteration_bounds needs D0, eps > 0 and f0_gap >= 0");
  }
  const double prod = 2.0 * sigma_l * (1.0 - sigma_u);
  const double kappa0 = std::sqrt(prod / (L * D0 * D0 * D0));
  const double head = 2.0 + 3.0 * kappa0 * std::sqrt(f0_gap);
  IterationBounds b;
  b.K = head / (kappa0 * std::sqrt(eps));
  b.J = 2.0 * std::pow(L, 1.0 / 6.0) * std::pow(head, 2.0 / 3.0) /
        (std::pow(prod, 1.0 / 6.0) * std::cbrt(kappa0) * std::sqrt(eps));
  return b;
}

double quadratic_rate_constant(double m_prime, double L, double sigma_l, double s_star_norm) {
  const double half = 0.5 * m_prime * L;
  const double inner = 1.0 + half * s_star_norm;
  return half * (1.0 + inner * inner / sigma_l);
}

double estimate_hessian_lipschitz(const Potential& f, const Vector& x0, double radius, int samples,
                                  std::uint64_t seed, double safety) {
  if (!f.hessian) throw Error(ErrorKind::ValidationError, "L estimation needs a Hessian");
  if (!(radius > 0.0) || samples < 1) {
    throw Error(ErrorKind::ValidationError, "L estimation needs radius > 0 and samples >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&] {
    Vector d(x0.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = normal(rng);
    return Vector(x0 + radius * d / std::max(1.0, d.norm()));
  };
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Vector u = draw();
    const Vector w = draw();
    const double dist = (u - w).norm();
    if (dist == 0.0) continue;
    worst = std::max(worst, operator_norm_estimate(f.hessian(u) - f.hessian(w)) / dist);
  }
  return safety * worst;
}

}  // namespace proxflow
