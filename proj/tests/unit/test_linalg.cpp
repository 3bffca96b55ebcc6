#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "proxflow/errors.hpp"
#include "proxflow/linalg.hpp"
#include "../support/generators.hpp"

using namespace proxflow;
using proxflow::testing::Gen;

namespace {
Vector vec2(double a, double b) { return (Vector(2) << a, b).finished(); }
}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("shifted_solve hand-worked systems") {
    CHECK((shifted_solve(Matrix::Identity(2, 2), 1.0, vec2(2, 0)) - vec2(1, 0)).norm() < 1e-14);
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = 3.0;
    CHECK((shifted_solve(h, 1.0, vec2(4, 2)) - vec2(1, 2)).norm() < 1e-14);
    CHECK((shifted_solve(Matrix::Zero(2, 2), 2.0, vec2(1, 1)) - vec2(0.5, 0.5)).norm() < 1e-14);
  }

  TEST_CASE("shifted_solve rejects bad input") {
    CHECK_THROWS_AS(shifted_solve(Matrix::Identity(2, 2), 1.0, Vector::Ones(3)), Error);
    try {
      shifted_solve(Matrix::Identity(2, 3), 1.0, Vector::Ones(2));
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
    CHECK_THROWS_AS(shifted_solve(Matrix::Identity(2, 2), 0.0, Vector::Ones(2)), Error);
    Matrix neg = -5.0 * Matrix::Identity(2, 2);
    try {
      shifted_solve(neg, 1.0, Vector::Ones(2));
      FAIL("expected NumericalBreakdown");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NumericalBreakdown);
    }
  }

  TEST_CASE("shifted_solve residual on random Gram matrices") {
    Gen g(101);
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = g.integer(1, 50);
      const Matrix h = g.gram(n, g.integer(1, n));
      const double mu = g.log_uniform(1e-3, 10.0);
      const Vector b = g.vec(n, g.log_uniform(1e-2, 1e2));
      const Vector s = shifted_solve(h, mu, b);
      const double res = (h * s + mu * s - b).norm();
      REQUIRE(res <= 1e-10 * (b.norm() + 1.0));
    }
  }

  TEST_CASE("shifted_solve is linear in b") {
    Gen g(102);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = g.integer(1, 20);
      const Matrix h = g.gram(n, n);
      const double mu = g.log_uniform(0.1, 10.0);
      const Vector b = g.vec(n);
      const Vector c = g.vec(n);
      const Vector s = shifted_solve(h, mu, b);
      CHECK((shifted_solve(h, mu, 2.0 * b) - 2.0 * s).norm() <= 1e-10 * (1.0 + s.norm()));
      CHECK((shifted_solve(h, mu, b + c) - s - shifted_solve(h, mu, c)).norm() <=
            1e-10 * (1.0 + s.norm()));
    }
  }

  TEST_CASE("operator_norm_estimate hand-worked matrices") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 5.0;
    CHECK(operator_norm_estimate(d) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(operator_norm_estimate(Matrix::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-12));
    Matrix swap(2, 2);
    swap << 0, 1, 1, 0;
    CHECK(operator_norm_estimate(swap) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(operator_norm_estimate(Matrix::Zero(4, 4)) == 0.0);
  }

  TEST_CASE("operator_norm_estimate against an eigensolver") {
    Gen g(103);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = g.integer(1, 30);
      Matrix h = g.gram(n, g.integer(1, n));
      if (trial % 3 == 0) h -= g.uniform(0.0, 2.0) * h.trace() / n * Matrix::Identity(n, n);
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
      const double exact = eig.eigenvalues().cwiseAbs().maxCoeff();
      CHECK(std::abs(operator_norm_estimate(h) - exact) <= 1e-6 * exact);
    }
  }

  TEST_CASE("is_symmetric") {
    Matrix a(2, 2);
    a << 1, 2, 2, 3;
    CHECK(is_symmetric(a));
    a(0, 1) = 2.1;
    CHECK_FALSE(is_symmetric(a));
  }
}
