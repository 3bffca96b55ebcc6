#pragma once

#include <functional>
#include <optional>
#include <string>

#include "proxflow/linalg.hpp"

namespace proxflow {

enum class ResolventKind { ClosedForm, InnerNewton };

/// Smooth convex potential f with A = grad f. `hessian_lipschitz` is the L of
/// ||hess f(x) - hess f(y)|| <= L ||x - y||; zero means "not supplied".
struct Potential {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
  double hessian_lipschitz = 0.0;
  /// Diameter of the sublevel set {f <= level}, when known in closed form.
  std::function<double(double level)> level_set_diameter;
};

/// Affine description of A^{-1}(0): anchor + span(directions). Zero columns
/// means a single point. Columns of `directions` are orthonormal.
struct ZeroSet {
  Vector anchor;
  Matrix directions;

  static ZeroSet point(Vector p);
  static ZeroSet affine(Vector anchor, Matrix orthonormal_directions);

  Vector project(const Vector& x) const;
  double distance(const Vector& x) const { return (x - project(x)).norm(); }
};

struct ResolventResult {
  Vector y;                     // J_lambda x
  Vector v;                     // witness with v in A(y)
  double inner_residual = 0.0;  // ||lambda v + y - x||
  double epsilon = 0.0;         // epsilon-subdifferential slack
  int inner_iterations = 0;
};

/// A maximal monotone operator described by its capabilities. Immutable;
/// copies share nothing mutable, so evaluation is re-entrant.
class MonotoneOperator {
 public:
  using ClosedFormResolvent = std::function<Vector(double lambda, const Vector& x)>;

  static MonotoneOperator closed_form(std::string name, int dim, ClosedFormResolvent resolvent,
                                      std::optional<Potential> potential = std::nullopt,
                                      std::optional<ZeroSet> zeros = std::nullopt,
                                      std::optional<double> min_value = std::nullopt);

  /// Resolvent computed by damped Newton on lambda grad f(y) + y - x = 0.
  static MonotoneOperator inner_newton(std::string name, int dim, Potential potential,
                                       std::optional<ZeroSet> zeros = std::nullopt,
                                       std::optional<double> min_value = std::nullopt);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  ResolventKind resolvent_kind() const { return kind_; }
  const std::optional<Potential>& potential() const { return potential_; }
  const std::optional<ZeroSet>& known_zero_set() const { return zeros_; }
  std::optional<double> known_min_value() const { return min_value_; }

  /// Copy with the Hessian-Lipschitz constant replaced. Requires a potential.
  MonotoneOperator with_hessian_lipschitz(double L) const;

  /// Direct closed-form evaluation; accepts lambda = 0 (returns x).
  Vector closed_form_resolvent(double lambda, const Vector& x) const;

 private:
  MonotoneOperator() = default;

  std::string name_;
  int dim_ = 0;
  ResolventKind kind_ = ResolventKind::ClosedForm;
  ClosedFormResolvent resolvent_;
  std::optional<Potential> potential_;
  std::optional<ZeroSet> zeros_;
  std::optional<double> min_value_;
};

/// A = alpha I, potential (alpha/2)||x||^2.
MonotoneOperator make_isotropic(double alpha, int dim);

/// Planar rotation A(xi, eta) = (-eta, xi). Monotone but not a gradient.
MonotoneOperator make_rotation(int dim = 2);

/// f(x) = 1/2 x'Qx + b'x with Q symmetric PSD. L defaults to 0 and must be
/// supplied through with_hessian_lipschitz for the proximal-Newton method.
MonotoneOperator make_quadratic(const Matrix& q, const Vector& b);

/// f(x) = ln(1 + e^x) - x/2 on the real line; minimizer 0, f'' (0) = 1/4.
MonotoneOperator make_logistic1d();

/// Inner-solver tolerance used when none is given.
inline constexpr double kDefaultResolventTol = 1e-10;

ResolventResult resolvent(const MonotoneOperator& op, double lambda, const Vector& x,
                          double tol = kDefaultResolventTol);

/// Yosida approximation (x - J_lambda x) / lambda.
Vector yosida(const MonotoneOperator& op, double lambda, const Vector& x,
              double tol = kDefaultResolventTol);

}  // namespace proxflow
