#include "proxflow/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "proxflow/errors.hpp"

namespace proxflow {

ZeroSet ZeroSet::point(Vector p) { return ZeroSet{std::move(p), Matrix(0, 0)}; }

ZeroSet ZeroSet::affine(Vector anchor, Matrix orthonormal_directions) {
  if (orthonormal_directions.cols() > 0) {
    require_same_dim(anchor.size(), orthonormal_directions.rows(), "ZeroSet::affine");
  }
  return ZeroSet{std::move(anchor), std::move(orthonormal_directions)};
}

Vector ZeroSet::project(const Vector& x) const {
  require_same_dim(x.size(), anchor.size(), "ZeroSet::project");
  if (directions.cols() == 0) return anchor;
  return anchor + directions * (directions.transpose() * (x - anchor));
}

MonotoneOperator MonotoneOperator::closed_form(std::string name, int dim,
                                               ClosedFormResolvent resolvent,
                                               std::optional<Potential> potential,
                                               std::optional<ZeroSet> zeros,
                                               std::optional<double> min_value) {
  if (dim < 1) throw Error(ErrorKind::ValidationError, "operator dimension must be >= 1");
  MonotoneOperator op;
  op.name_ = std::move(name);
  op.dim_ = dim;
  op.kind_ = ResolventKind::ClosedForm;
  op.resolvent_ = std::move(resolvent);
  op.potential_ = std::move(potential);
  op.zeros_ = std::move(zeros);
  op.min_value_ = min_value;
  return op;
}

MonotoneOperator MonotoneOperator::inner_newton(std::string name, int dim, Potential potential,
                                                std::optional<ZeroSet> zeros,
                                                std::optional<double> min_value) {
  if (dim < 1) throw Error(ErrorKind::ValidationError, "operator dimension must be >= 1");
  if (!potential.gradient || !potential.hessian) {
    throw Error(ErrorKind::ValidationError, "inner-Newton resolvent needs gradient and Hessian");
  }
  MonotoneOperator op;
  op.name_ = std::move(name);
  op.dim_ = dim;
  op.kind_ = ResolventKind::InnerNewton;
  op.potential_ = std::move(potential);
  op.zeros_ = std::move(zeros);
  op.min_value_ = min_value;
  return op;
}

MonotoneOperator MonotoneOperator::with_hessian_lipschitz(double L) const {
  if (!potential_) {
    throw Error(ErrorKind::ValidationError, name_ + " has no potential to attach L to");
  }
  if (!(L >= 0.0) || !std::isfinite(L)) {
    throw Error(ErrorKind::ValidationError, "Hessian-Lipschitz constant must be finite and >= 0");
  }
  MonotoneOperator copy = *this;
  copy.potential_->hessian_lipschitz = L;
  return copy;
}

Vector MonotoneOperator::closed_form_resolvent(double lambda, const Vector& x) const {
  if (kind_ != ResolventKind::ClosedForm) {
    throw Error(ErrorKind::ValidationError, name_ + " has no closed-form resolvent");
  }
  require_same_dim(x.size(), dim_, "closed_form_resolvent");
  if (lambda == 0.0) return x;
  return resolvent_(lambda, x);
}

MonotoneOperator make_isotropic(double alpha, int dim) {
  if (!(alpha > 0.0)) throw Error(ErrorKind::ValidationError, "isotropic: alpha must be > 0");
  Potential pot;
  pot.value = [alpha](const Vector& x) { return 0.5 * alpha * x.squaredNorm(); };
  pot.gradient = [alpha](const Vector& x) -> Vector { return alpha * x; };
  pot.hessian = [alpha](const Vector& x) -> Matrix {
    return alpha * Matrix::Identity(x.size(), x.size());
  };
  pot.level_set_diameter = [alpha](double level) {
    return level <= 0.0 ? 0.0 : 2.0 * std::sqrt(2.0 * level / alpha);
  };
  return MonotoneOperator::closed_form(
      "isotropic", dim,
      [alpha](double lambda, const Vector& x) -> Vector { return x / (1.0 + lambda * alpha); },
      std::move(pot), ZeroSet::point(Vector::Zero(dim)), 0.0);
}

MonotoneOperator make_rotation(int dim) {
  if (dim != 2) throw Error(ErrorKind::ValidationError, "rotation operator is planar (dim = 2)");
  return MonotoneOperator::closed_form(
      "rotation", 2,
      [](double lambda, const Vector& x) -> Vector {
        const double scale = 1.0 / (1.0 + lambda * lambda);
        Vector y(2);
        y << scale * (x[0] + lambda * x[1]), scale * (x[1] - lambda * x[0]);
        return y;
      },
      std::nullopt, ZeroSet::point(Vector::Zero(2)), std::nullopt);
}

MonotoneOperator make_quadratic(const Matrix& q, const Vector& b) {
  if (q.rows() != q.cols()) throw Error(ErrorKind::DimensionMismatch, "quadratic: Q not square");
  require_same_dim(q.rows(), b.size(), "quadratic");
  if (!is_symmetric(q)) throw Error(ErrorKind::ValidationError, "quadratic: Q not symmetric");
  const int n = static_cast<int>(q.rows());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(q);
  const Vector evals = eig.eigenvalues();
  const double qnorm = std::max(evals.cwiseAbs().maxCoeff(), 0.0);
  const double rank_tol = 1e-12 * std::max(qnorm, 1.0);
  if (evals.minCoeff() < -1e-10 * std::max(qnorm, 1.0)) {
    throw Error(ErrorKind::ValidationError, "quadratic: Q is not positive semidefinite");
  }

  Potential pot;
  pot.value = [q, b](const Vector& x) { return 0.5 * x.dot(q * x) + b.dot(x); };
  pot.gradient = [q, b](const Vector& x) -> Vector { return q * x + b; };
  pot.hessian = [q](const Vector&) -> Matrix { return q; };

  // Zero set of Qx + b: particular solution -Q^+ b plus ker Q, provided b is in range(Q).
  std::optional<ZeroSet> zeros;
  std::optional<double> min_value;
  const Matrix& basis = eig.eigenvectors();
  Vector coeffs = basis.transpose() * b;
  Vector anchor_coeffs = Vector::Zero(n);
  std::vector<Eigen::Index> null_idx;
  double null_component = 0.0;
  for (int i = 0; i < n; ++i) {
    if (evals[i] > rank_tol) {
      anchor_coeffs[i] = -coeffs[i] / evals[i];
    } else {
      null_idx.push_back(i);
      null_component += coeffs[i] * coeffs[i];
    }
  }
  if (std::sqrt(null_component) <= 1e-12 * (1.0 + b.norm())) {
    Vector anchor = basis * anchor_coeffs;
    Matrix dirs(n, static_cast<Eigen::Index>(null_idx.size()));
    for (std::size_t j = 0; j < null_idx.size(); ++j) dirs.col(j) = basis.col(null_idx[j]);
    min_value = pot.value(anchor);
    zeros = null_idx.empty() ? ZeroSet::point(anchor) : ZeroSet::affine(anchor, dirs);
  }
  if (null_idx.empty() && min_value) {
    const double lmin = evals.minCoeff();
    const double fmin = *min_value;
    pot.level_set_diameter = [lmin, fmin](double level) {
      return level <= fmin ? 0.0 : 2.0 * std::sqrt(2.0 * (level - fmin) / lmin);
    };
  }

  return MonotoneOperator::closed_form(
      "quadratic", n,
      [q, b](double lambda, const Vector& x) -> Vector {
        // (I + lambda Q) y = x - lambda b, scaled by 1/lambda.
        return shifted_solve(q, 1.0 / lambda, (x - lambda * b) / lambda);
      },
      std::move(pot), std::move(zeros), min_value);
}

namespace {

// ln(2 cosh(x/2)) == ln(1 + e^x) - x/2, evaluated without overflow.
double logistic_value(double x) {
  const double a = std::abs(x);
  return 0.5 * a + std::log1p(std::exp(-a));
}

}  // namespace

MonotoneOperator make_logistic1d() {
  Potential pot;
  pot.value = [](const Vector& x) { return logistic_value(x[0]); };
  // sigmoid(x) - 1/2 == tanh(x/2)/2, which keeps full relative accuracy near 0.
  pot.gradient = [](const Vector& x) -> Vector {
    return Vector::Constant(1, 0.5 * std::tanh(0.5 * x[0]));
  };
  pot.hessian = [](const Vector& x) -> Matrix {
    const double t = std::tanh(0.5 * x[0]);
    return Matrix::Constant(1, 1, 0.25 * (1.0 - t * t));
  };
  // max |f'''| = 1/(6 sqrt 3) ~ 0.0962.
  pot.hessian_lipschitz = 0.1;
  pot.level_set_diameter = [](double level) {
    if (level <= std::log(2.0)) return 0.0;
    // f is even and increasing on [0, inf); f(r) >= r/2, so r <= 2 level.
    double lo = 0.0;
    double hi = 2.0 * level;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (logistic_value(mid) <= level ? lo : hi) = mid;
    }
    return 2.0 * hi;
  };
  return MonotoneOperator::inner_newton("logistic1d", 1, std::move(pot),
                                        ZeroSet::point(Vector::Zero(1)), std::log(2.0));
}

namespace {

ResolventResult inner_newton_resolvent(const Potential& pot, double lambda, const Vector& x,
                                       double tol) {
  constexpr int kMaxIter = 100;
  constexpr int kMaxHalvings = 30;
  Vector y = x;
  Vector grad = pot.gradient(y);
  Vector residual = lambda * grad + y - x;
  double res_norm = residual.norm();
  int it = 0;
  while (res_norm > tol * std::max(1.0, (x - y).norm())) {
    if (++it > kMaxIter) {
      throw Error(ErrorKind::NoConvergence, "inner Newton exceeded 100 iterations");
    }
    // (lambda H + I) d = -r, posed as (H + I/lambda) d = -r/lambda.
    const Vector d = shifted_solve(pot.hessian(y), 1.0 / lambda, -residual / lambda);
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
      Vector trial = y + step * d;
      Vector trial_grad = pot.gradient(trial);
      Vector trial_res = lambda * trial_grad + trial - x;
      const double trial_norm = trial_res.norm();
      if (trial_norm < res_norm) {
        y = std::move(trial);
        grad = std::move(trial_grad);
        residual = std::move(trial_res);
        res_norm = trial_norm;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw Error(ErrorKind::NoConvergence,
                  "inner Newton stalled at residual " + std::to_string(res_norm));
    }
  }
  return ResolventResult{std::move(y), std::move(grad), res_norm, 0.0, it};
}

}  // namespace

ResolventResult resolvent(const MonotoneOperator& op, double lambda, const Vector& x, double tol) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::BadLambda, "resolvent needs a finite lambda > 0");
  }
  require_same_dim(x.size(), op.dim(), "resolvent");
  if (op.resolvent_kind() == ResolventKind::ClosedForm) {
    Vector y = op.closed_form_resolvent(lambda, x);
    Vector v = (x - y) / lambda;
    return ResolventResult{std::move(y), std::move(v), 0.0, 0.0, 0};
  }
  if (!(tol > 0.0)) throw Error(ErrorKind::ValidationError, "resolvent tolerance must be > 0");
  return inner_newton_resolvent(*op.potential(), lambda, x, tol);
}

Vector yosida(const MonotoneOperator& op, double lambda, const Vector& x, double tol) {
  return (x - resolvent(op, lambda, x, tol).y) / lambda;
}

}  // namespace proxflow
