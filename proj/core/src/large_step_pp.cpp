#include "proxflow/large_step_pp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "proxflow/errors.hpp"
#include "proxflow/lambda_solver.hpp"

namespace proxflow {

CertificateVerdict check_certificate(const ProxCertificate& cert, double sigma, double theta) {
  CertificateVerdict verdict;
  verdict.inclusion_slack = cert.epsilon;
  verdict.inclusion = cert.epsilon >= 0.0;
  const double lhs = cert.eq_residual * cert.eq_residual + 2.0 * cert.lambda * cert.epsilon;
  verdict.relative_error_slack = sigma * sigma * cert.step_norm * cert.step_norm - lhs;
  verdict.relative_error = verdict.relative_error_slack >= 0.0;
  verdict.large_step_slack = cert.lambda * cert.step_norm - theta;
  verdict.large_step = verdict.large_step_slack >= 0.0 || cert.v.norm() == 0.0;
  return verdict;
}

std::string_view to_string(PPStatus status) noexcept {
  switch (status) {
    case PPStatus::Converged: return "Converged";
    case PPStatus::MaxIter: return "MaxIter";
    case PPStatus::ZeroGradient: return "ZeroGradient";
  }
  return "Unknown";
}

namespace {

void validate(const PPConfig& cfg) {
  if (!(cfg.theta > 0.0)) throw Error(ErrorKind::ValidationError, "theta must be > 0");
  if (!(cfg.sigma >= 0.0 && cfg.sigma < 1.0)) {
    throw Error(ErrorKind::ValidationError, "sigma must lie in [0, 1)");
  }
  if (!(cfg.grad_tol > 0.0)) throw Error(ErrorKind::ValidationError, "grad_tol must be > 0");
  if (cfg.max_iter < 0) throw Error(ErrorKind::ValidationError, "max_iter must be >= 0");
}

ProxCertificate certify(const MonotoneOperator& op, const Vector& x_prev, double lambda, Vector y,
                        Vector v, double inner_residual) {
  ProxCertificate cert;
  cert.lambda = lambda;
  cert.step_norm = (y - x_prev).norm();
  if (op.resolvent_kind() == ResolventKind::InnerNewton) {
    // v = grad f(y) exactly; the inexactness is all in the equation residual.
    cert.eq_residual = (lambda * v + y - x_prev).norm();
  } else {
    cert.eq_residual = inner_residual;
  }
  cert.y = std::move(y);
  cert.v = std::move(v);
  return cert;
}

}  // namespace

PPStep pp_step(const MonotoneOperator& op, const Vector& x_prev, const PPConfig& cfg, int k) {
  validate(cfg);
  const auto& pot = op.potential();
  if (!pot || !pot->gradient) {
    throw Error(ErrorKind::ValidationError, "the large-step method needs a potential");
  }
  require_same_dim(x_prev.size(), op.dim(), "pp_step");
  if (pot->gradient(x_prev).norm() <= cfg.grad_tol) {
    throw Error(ErrorKind::ZeroGradient, "x_prev is a minimizer");
  }

  double inner_tol = cfg.resolvent_tol;
  constexpr int kTightenings = 6;
  for (int attempt = 0; attempt <= kTightenings; ++attempt, inner_tol *= 1e-2) {
    ProxCertificate cert;
    if (cfg.lambda_schedule) {
      const double lambda = cfg.lambda_schedule(k, x_prev);
      ResolventResult r = resolvent(op, lambda, x_prev, inner_tol);
      cert = certify(op, x_prev, lambda, std::move(r.y), std::move(r.v), r.inner_residual);
    } else {
      LambdaSolveOptions opts;
      opts.rel_tol = cfg.lambda_rel_tol;
      opts.resolvent_tol = inner_tol;
      // phi >= theta makes the large-step inequality hold without rounding slack.
      opts.side = LambdaSide::AtLeast;
      PhiEvaluation eval;
      try {
        eval = solve_lambda(op, cfg.theta, x_prev, opts);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::ZeroResidual) {
          throw Error(ErrorKind::ZeroGradient, "x_prev is numerically a minimizer");
        }
        throw;
      }
      cert = certify(op, x_prev, eval.lambda, std::move(eval.y), std::move(eval.v), 0.0);
    }
    CertificateVerdict verdict = check_certificate(cert, cfg.sigma, cfg.theta);
    if (verdict.all()) {
      Vector next = cert.y;
      return PPStep{std::move(next), std::move(cert), verdict};
    }
    if (verdict.relative_error) {
      // Tightening the inner solve cannot repair a too-short step.
      throw Error(ErrorKind::CertificateRejected,
                  "large-step condition fails for lambda = " + std::to_string(cert.lambda));
    }
  }
  throw Error(ErrorKind::NoConvergence, "could not meet the relative-error tolerance");
}

double rate_bound(double f0_gap, double kappa, int k) {
  if (!(f0_gap >= 0.0)) throw Error(ErrorKind::ValidationError, "f0_gap must be >= 0");
  if (f0_gap == 0.0) return 0.0;
  const double root = std::sqrt(f0_gap);
  const double denom = 1.0 + k * kappa * root / (2.0 + 3.0 * kappa * root);
  return f0_gap / (denom * denom);
}

double residual_window_bound(double f0_gap, double kappa, double theta, double sigma, int k_even) {
  if (k_even < 2 || k_even % 2 != 0) {
    throw Error(ErrorKind::BadK, "window bound needs an even k >= 2, got " + std::to_string(k_even));
  }
  if (!(f0_gap >= 0.0)) throw Error(ErrorKind::ValidationError, "f0_gap must be >= 0");
  if (f0_gap == 0.0) return 0.0;
  const double root = std::sqrt(f0_gap);
  const double k = static_cast<double>(k_even);
  const double inner = 2.0 + k * kappa * root / (2.0 + 3.0 * kappa * root);
  const double core = f0_gap / (k * inner * inner);
  return 4.0 / std::cbrt(theta * (1.0 - sigma)) * std::pow(core, 2.0 / 3.0);
}

std::vector<double> PPRun::inverse_cube_partial_sums() const {
  std::vector<double> sums;
  sums.reserve(iterates.size());
  double acc = 0.0;
  for (const PPIterate& it : iterates) {
    const double l = it.cert.lambda;
    acc += 1.0 / (l * l * l);
    sums.push_back(acc);
  }
  return sums;
}

double PPRun::window_min_residual(int k_even) const {
  if (k_even < 2 || k_even % 2 != 0) {
    throw Error(ErrorKind::BadK, "window needs an even k >= 2");
  }
  if (static_cast<std::size_t>(k_even) > iterates.size()) {
    throw Error(ErrorKind::InsufficientData, "run has fewer than k iterates");
  }
  double best = std::numeric_limits<double>::infinity();
  for (int j = k_even / 2 + 1; j <= k_even; ++j) {
    best = std::min(best, iterates[static_cast<std::size_t>(j - 1)].cert.v.norm());
  }
  return best;
}

PPRun run_pp(const MonotoneOperator& op, const Vector& x0, const PPConfig& cfg) {
  validate(cfg);
  require_finite(x0, "x0");
  require_same_dim(x0.size(), op.dim(), "run_pp");
  const auto& pot = op.potential();
  if (!pot || !pot->value || !pot->gradient) {
    throw Error(ErrorKind::ValidationError, "the large-step method needs a potential");
  }

  PPRun run;
  run.config = cfg;
  run.x0 = x0;
  run.f0 = pot->value(x0);
  if (!std::isfinite(run.f0)) throw Error(ErrorKind::ValidationError, "f(x0) is not finite");

  Vector x = x0;
  double f_prev = run.f0;
  run.status = PPStatus::MaxIter;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    PPStep step;
    try {
      step = pp_step(op, x, cfg, k);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroGradient) throw;
      run.status = k == 1 ? PPStatus::ZeroGradient : PPStatus::Converged;
      break;
    }
    const ProxCertificate& c = step.cert;
    const double f = pot->value(step.x_next);
    const double lam = c.lambda;
    const double vn = c.v.norm();
    const double s = cfg.sigma;

    PPStepChecks chk;
    const double split = 0.5 * lam * vn * vn + (1.0 - s * s) / (2.0 * lam) * c.step_norm * c.step_norm;
    chk.descent_slack = f_prev - f - split;
    chk.step_ratio_lower_slack = lam * vn - (1.0 - s) * c.step_norm;
    chk.step_ratio_upper_slack = (1.0 + s) * c.step_norm - lam * vn;
    chk.max_bound_slack = split - std::pow(vn, 1.5) * std::sqrt(cfg.theta * (1.0 - s));

    run.iterates.push_back(PPIterate{k, step.x_next, c, f});
    run.checks.push_back(chk);
    x = std::move(step.x_next);
    f_prev = f;
    if (vn <= cfg.grad_tol) {
      run.status = PPStatus::Converged;
      break;
    }
  }

  // Rate constants. D0 is the diameter of {f <= f(x0)}; without a closed form it is
  // estimated from the visited points and the known minimizer.
  PPConstants& cst = run.constants;
  cst.f_star = op.known_min_value();
  if (pot->level_set_diameter) {
    cst.D0 = pot->level_set_diameter(run.f0);
  } else {
    std::vector<Vector> pts{x0};
    for (const PPIterate& it : run.iterates) pts.push_back(it.x);
    if (op.known_zero_set()) pts.push_back(op.known_zero_set()->project(x0));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        cst.D0 = std::max(cst.D0, (pts[i] - pts[j]).norm());
      }
    }
    cst.D0_estimated = true;
  }
  if (cst.D0 > 0.0) {
    const double s = cfg.sigma;
    cst.kappa0 = std::sqrt(cfg.theta * (1.0 - s) / (cst.D0 * cst.D0 * cst.D0));
    cst.D_hat = cst.D0 * (1.0 + s * s / (2.0 * (1.0 - s)));
    cst.kappa = std::sqrt(cfg.theta * (1.0 - s) / (cst.D_hat * cst.D_hat * cst.D_hat));
  }
  if (cst.f_star && cst.D0 > 0.0) {
    const double gap0 = run.f0 - *cst.f_star;
    const bool exact = std::all_of(run.iterates.begin(), run.iterates.end(),
                                   [](const PPIterate& it) { return it.cert.epsilon == 0.0; });
    const double kappa = exact ? cst.kappa0 : cst.kappa;
    for (std::size_t i = 0; i < run.iterates.size(); ++i) {
      const double bound = rate_bound(std::max(gap0, 0.0), kappa, run.iterates[i].k);
      run.checks[i].rate_bound = bound;
      run.checks[i].rate_slack = bound - (run.iterates[i].f - *cst.f_star);
    }
  }
  return run;
}

DecayLemmaVerdict decay_lemma_check(const std::vector<double>& a, double tau) {
  DecayLemmaVerdict verdict;
  if (a.empty()) {
    verdict.reason = "empty sequence";
    return verdict;
  }
  if (!(tau >= 0.0)) {
    verdict.reason = "tau must be >= 0";
    return verdict;
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!(a[k] >= 0.0)) {
      verdict.reason = "a_" + std::to_string(k) + " is negative";
      return verdict;
    }
  }
  const double root0 = std::sqrt(a[0]);
  if (tau * root0 > 1.0) {
    verdict.reason = "tau sqrt(a_0) > 1";
    return verdict;
  }
  constexpr double kRound = 4.0 * std::numeric_limits<double>::epsilon();
  for (std::size_t k = 1; k < a.size(); ++k) {
    const double cap = a[k - 1] - tau * std::pow(a[k - 1], 1.5);
    if (a[k] > cap + kRound * a[k - 1]) {
      verdict.reason = "a_" + std::to_string(k) + " > a_" + std::to_string(k - 1) +
                       " - tau a_" + std::to_string(k - 1) + "^{3/2}";
      return verdict;
    }
  }
  verdict.hypotheses_hold = true;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double denom = 1.0 + static_cast<double>(k) * tau * root0 / 2.0;
    if (a[k] > a[0] / (denom * denom) * (1.0 + kRound)) {
      verdict.reason = "conclusion fails at k = " + std::to_string(k);
      return verdict;
    }
  }
  verdict.conclusion_holds = true;
  return verdict;
}

}  // namespace proxflow
