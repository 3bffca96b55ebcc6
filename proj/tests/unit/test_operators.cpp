#include <doctest.h>

#include <cmath>

#include "proxflow/errors.hpp"
#include "proxflow/operators.hpp"
#include "../support/generators.hpp"

using namespace proxflow;
using proxflow::testing::Gen;
using proxflow::testing::random_operator;

namespace {

Vector v1(double a) { return (Vector(1) << a).finished(); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

double logistic_grad(double y) { return 0.5 * std::tanh(0.5 * y); }

// Root of lambda f'(y) + y - x, which is increasing in y, by plain bisection.
double bisect_resolvent(double lambda, double x) {
  double lo = x - lambda * 0.5 - 1.0;
  double hi = x + lambda * 0.5 + 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (lambda * logistic_grad(mid) + mid - x < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("operators") {
  TEST_CASE("isotropic resolvent closed form") {
    const auto a1 = make_isotropic(1.0, 2);
    CHECK((resolvent(a1, 1.0, v2(2, 0)).y - v2(1, 0)).norm() < 1e-14);
    CHECK(resolvent(a1, 3.7, v2(0, 0)).y.norm() == 0.0);
    const auto a2 = make_isotropic(2.0, 1);
    CHECK((resolvent(a2, 0.5, v1(4)).y - v1(2)).norm() < 1e-14);
  }

  TEST_CASE("rotation resolvent closed form") {
    const auto r = make_rotation();
    CHECK((resolvent(r, 1.0, v2(1, 0)).y - v2(0.5, -0.5)).norm() < 1e-14);
    CHECK((r.closed_form_resolvent(0.0, v2(1, 3)) - v2(1, 3)).norm() == 0.0);
    CHECK((resolvent(r, 2.0, v2(0, 5)).y - v2(2, 1)).norm() < 1e-14);
    CHECK_FALSE(r.potential().has_value());
  }

  TEST_CASE("quadratic resolvent closed form") {
    CHECK((resolvent(make_quadratic(Matrix::Identity(2, 2), Vector::Zero(2)), 1.0, v2(2, 2)).y -
           v2(1, 1)).norm() < 1e-14);
    Matrix q = Matrix::Zero(2, 2);
    q(0, 0) = 1.0;
    CHECK((resolvent(make_quadratic(q, Vector::Zero(2)), 3.0, v2(4, 4)).y - v2(1, 4)).norm() <
          1e-14);
    const auto lin = make_quadratic(Matrix::Zero(1, 1), v1(1));
    CHECK((resolvent(lin, 2.0, v1(5)).y - v1(3)).norm() < 1e-14);
    CHECK_FALSE(lin.known_zero_set().has_value());
  }

  TEST_CASE("quadratic factory rejects indefinite or asymmetric Q") {
    Matrix q(2, 2);
    q << 1, 0, 0, -1;
    CHECK_THROWS_AS(make_quadratic(q, Vector::Zero(2)), Error);
    q << 1, 1, 0, 1;
    CHECK_THROWS_AS(make_quadratic(q, Vector::Zero(2)), Error);
  }

  TEST_CASE("singular quadratic zero set is an affine subspace") {
    Matrix q = Matrix::Zero(2, 2);
    q(0, 0) = 2.0;
    const auto op = make_quadratic(q, v2(-2, 0));
    REQUIRE(op.known_zero_set().has_value());
    const ZeroSet& z = *op.known_zero_set();
    CHECK(z.directions.cols() == 1);
    CHECK(z.distance(v2(1, 7)) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(z.distance(v2(4, 7)) == doctest::Approx(3.0));
    CHECK(*op.known_min_value() == doctest::Approx(-1.0));
  }

  TEST_CASE("logistic potential values") {
    const auto op = make_logistic1d();
    const Potential& f = *op.potential();
    CHECK(f.gradient(v1(0))[0] == 0.0);
    CHECK(f.gradient(v1(1))[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0)) - 0.5).epsilon(1e-14));
    CHECK(f.gradient(v1(1))[0] == doctest::Approx(0.2311).epsilon(1e-4));
    CHECK(f.hessian(v1(0))(0, 0) == doctest::Approx(0.25));
    CHECK(f.value(v1(0)) == doctest::Approx(std::log(2.0)));
    CHECK(f.value(v1(800)) == doctest::Approx(400.0));
    CHECK(op.resolvent_kind() == ResolventKind::InnerNewton);
  }

  TEST_CASE("resolvent pair of a closed-form operator") {
    const auto r = resolvent(make_isotropic(1.0, 2), 1.0, v2(2, 0));
    CHECK((r.y - v2(1, 0)).norm() < 1e-14);
    CHECK((r.v - v2(1, 0)).norm() < 1e-14);
    CHECK(r.inner_residual == 0.0);
    CHECK(r.epsilon == 0.0);
  }

  TEST_CASE("zeros are fixed points") {
    Gen g(201);
    for (int trial = 0; trial < 50; ++trial) {
      int n = 0;
      const auto op = random_operator(g, n);
      const Vector z = op.known_zero_set()->anchor;
      const auto r = resolvent(op, g.log_uniform(0.01, 100.0), z);
      CHECK((r.y - z).norm() <= 1e-12);
      CHECK(r.v.norm() <= 1e-12);
    }
    const auto lg = resolvent(make_logistic1d(), 5.0, v1(0));
    CHECK(std::abs(lg.y[0]) <= 1e-14);
  }

  TEST_CASE("inner Newton agrees with scalar bisection") {
    const auto op = make_logistic1d();
    const auto r = resolvent(op, 1.0, v1(1.0));
    CHECK(std::abs(logistic_grad(r.y[0]) + r.y[0] - 1.0) <= kDefaultResolventTol);
    CHECK(std::abs(r.y[0] - bisect_resolvent(1.0, 1.0)) <= 1e-9);

    Gen g(202);
    for (int trial = 0; trial < 100; ++trial) {
      const double lambda = g.log_uniform(1e-3, 1e4);
      const double x = g.uniform(-50.0, 50.0);
      const auto res = resolvent(op, lambda, v1(x));
      CHECK(res.inner_residual <= kDefaultResolventTol * std::max(1.0, std::abs(x - res.y[0])));
      CHECK(std::abs(res.y[0] - bisect_resolvent(lambda, x)) <= 1e-9 * (1.0 + std::abs(x)));
      CHECK(res.epsilon == 0.0);
    }
  }

  TEST_CASE("non-positive lambda is rejected") {
    for (double lambda : {0.0, -1.0}) {
      try {
        resolvent(make_isotropic(1.0, 1), lambda, v1(1));
        FAIL("expected BadLambda");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BadLambda);
      }
    }
  }

  TEST_CASE("resolvent equation") {
    Gen g(203);
    for (int trial = 0; trial < 300; ++trial) {
      int n = 0;
      const auto op = random_operator(g, n);
      const double lambda = g.uniform(0.1, 10.0);
      const double mu = g.uniform(0.1, 10.0);
      const Vector x = g.vec(n, 3.0);
      const Vector jl = resolvent(op, lambda, x).y;
      const Vector arg = (mu / lambda) * x + (1.0 - mu / lambda) * jl;
      CHECK((jl - resolvent(op, mu, arg).y).norm() <= 1e-8);
    }
  }

  TEST_CASE("resolvent is Lipschitz in lambda") {
    Gen g(204);
    for (int trial = 0; trial < 300; ++trial) {
      int n = 0;
      const auto op = random_operator(g, n);
      const double lambda = g.uniform(0.1, 10.0);
      const double mu = g.uniform(0.1, 10.0);
      const Vector x = g.vec(n, 3.0);
      const double lhs = (resolvent(op, lambda, x).y - resolvent(op, mu, x).y).norm();
      CHECK(lhs <= std::abs(lambda - mu) * yosida(op, lambda, x).norm() + 1e-8);
    }
  }

  TEST_CASE("Yosida approximation") {
    CHECK((yosida(make_isotropic(1.0, 2), 1.0, v2(2, 0)) - v2(1, 0)).norm() < 1e-14);
    Gen g(205);
    for (int trial = 0; trial < 300; ++trial) {
      int n = 0;
      const auto op = random_operator(g, n);
      const double lambda = g.log_uniform(0.05, 20.0);
      const Vector x1 = g.vec(n, 2.0);
      const Vector x2 = g.vec(n, 2.0);
      const Vector a1 = yosida(op, lambda, x1);
      const Vector a2 = yosida(op, lambda, x2);
      CHECK((a1 - a2).norm() <= (x1 - x2).norm() / lambda + 1e-10);
      // Monotone and non-increasing in lambda.
      CHECK((a1 - a2).dot(x1 - x2) >= -1e-10);
      CHECK(yosida(op, 2.0 * lambda, x1).norm() <= a1.norm() + 1e-12);
      CHECK(yosida(op, lambda, op.known_zero_set()->anchor).norm() <= 1e-12);
    }
  }

  TEST_CASE("resolvent is firmly nonexpansive") {
    Gen g(206);
    for (int trial = 0; trial < 300; ++trial) {
      int n = 0;
      const auto op = random_operator(g, n);
      const double lambda = g.log_uniform(0.05, 20.0);
      const Vector x1 = g.vec(n, 2.0);
      const Vector x2 = g.vec(n, 2.0);
      const Vector d = resolvent(op, lambda, x1).y - resolvent(op, lambda, x2).y;
      CHECK(d.squaredNorm() <= d.dot(x1 - x2) + 1e-10);
      CHECK(d.norm() <= (x1 - x2).norm() + 1e-12);
    }
  }
}
