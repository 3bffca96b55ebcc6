#include <doctest.h>

#include <cmath>

#include "proxflow/continuous_flow.hpp"
#include "proxflow/errors.hpp"
#include "../support/generators.hpp"

using namespace proxflow;
using proxflow::testing::Gen;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

}  // namespace

TEST_SUITE("continuous_flow") {
  TEST_CASE("isotropic flow follows its implicit law") {
    const auto traj = integrate(make_isotropic(1.0, 2), v2(1, 0), 1.0);
    REQUIRE(traj.samples.size() == 1001);
    CHECK(traj.status == FlowStatus::Completed);
    CHECK(traj.samples.front().lambda == doctest::Approx(kGolden).epsilon(1e-10));
    CHECK(traj.samples.back().t == doctest::Approx(10.0));
    const double c = std::log(kGolden) - 2.0 / kGolden;
    double worst = 0.0;
    for (const auto& s : traj.samples) {
      worst = std::max(worst, std::abs(std::log(s.lambda) - 2.0 / s.lambda - s.t - c));
    }
    CHECK(worst <= 1e-4);
    CHECK(traj.max_constraint_defect <= 1e-10);
  }

  TEST_CASE("rotation flow follows its implicit law") {
    // theta = lambda^2 ||x|| / sqrt(1 + lambda^2) and ||x||' = -lambda^2 ||x|| / (1 + lambda^2)
    // give lambda' (2 + lambda^2) = lambda^3.
    const auto traj = integrate(make_rotation(), v2(1, 0), 1.0);
    const double l0 = std::sqrt(kGolden);
    CHECK(traj.samples.front().lambda == doctest::Approx(l0).epsilon(1e-10));
    const double c = std::log(l0) - 1.0 / (l0 * l0);
    double worst = 0.0;
    double worst_rel = 0.0;
    for (const auto& s : traj.samples) {
      worst = std::max(worst, std::abs(std::log(s.lambda) - 1.0 / (s.lambda * s.lambda) - s.t - c));
      const double ref = rotation_flow_lambda(l0, s.t);
      worst_rel = std::max(worst_rel, std::abs(s.lambda - ref) / ref);
    }
    CHECK(worst <= 1e-4);
    CHECK(worst_rel <= 1e-4);
    CHECK(traj.fx.empty());
  }

  TEST_CASE("rotation_flow_lambda solves its law") {
    Gen g(41);
    for (int i = 0; i < 200; ++i) {
      const double l0 = g.log_uniform(1e-2, 1e2);
      const double t = g.uniform(0.0, 30.0);
      const double l = rotation_flow_lambda(l0, t);
      const double lhs = std::log(l) - 1.0 / (l * l);
      const double rhs = t + std::log(l0) - 1.0 / (l0 * l0);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12).scale(1.0));
    }
  }

  TEST_CASE("samples respect the stride and tau starts at zero") {
    FlowConfig cfg;
    cfg.t_end = 1.0;
    cfg.sample_stride = 7;
    const auto traj = integrate(make_isotropic(1.0, 2), v2(0, 2), 1.0, cfg);
    CHECK(traj.samples.size() == 16);  // n = 0, 7, ..., 98 and the final step
    CHECK(traj.samples.back().t == doctest::Approx(1.0));
    CHECK(traj.tau.front() == 0.0);
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
      const auto& s = traj.samples[i];
      CHECK(traj.tau[i] == doctest::Approx(s.t + std::log(s.lambda / traj.samples[0].lambda)));
    }
  }

  TEST_CASE("a start on the zero set raises ZeroResidual") {
    try {
      integrate(make_isotropic(1.0, 2), v2(0, 0), 1.0);
      FAIL("expected ZeroResidual");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ZeroResidual);
    }
  }

  TEST_CASE("flow stabilizes when speed drops below the floor") {
    FlowConfig cfg;
    cfg.speed_floor = 1e-3;
    cfg.t_end = 50.0;
    const auto traj = integrate(make_isotropic(1.0, 1), (Vector(1) << 1.0).finished(), 1.0, cfg);
    CHECK(traj.status == FlowStatus::Stabilized);
    CHECK(traj.samples.back().speed < 1e-3);
    CHECK(traj.samples.back().t < 50.0);
  }

  TEST_CASE("RK4 converges at fourth order") {
    // Reference at a fine step, then compare h and h/2.
    const auto op = make_isotropic(1.0, 2);
    auto end_at = [&](double h) {
      FlowConfig cfg;
      cfg.h = h;
      cfg.t_end = 2.0;
      cfg.rel_tol = 1e-14;
      cfg.resolvent_tol = 1e-14;
      return integrate(op, v2(1, 0), 1.0, cfg).samples.back().x;
    };
    const Vector ref = end_at(0.0025);
    const double e1 = (end_at(0.2) - ref).norm();
    const double e2 = (end_at(0.1) - ref).norm();
    CHECK(std::log2(e1 / e2) >= 3.5);
  }

  TEST_CASE("lambda oracles") {
    CHECK(isotropic_lambda_oracle(1.0, kGolden, 0.0) == doctest::Approx(kGolden).epsilon(1e-15));
    const double l5 = isotropic_lambda_oracle(1.0, kGolden, 5.0);
    CHECK(std::abs(std::log(l5) - 2.0 / l5 - 5.0 - std::log(kGolden) + 2.0 / kGolden) <= 1e-12);
    // ln l - t tends to ln l0 - 2/l0, so ln(l)/t approaches 1 only at rate 1/t.
    const double offset = std::log(kGolden) - 2.0 / kGolden;
    for (double t : {30.0, 100.0, 600.0}) {
      const double l = isotropic_lambda_oracle(1.0, kGolden, t);
      CHECK(std::abs(std::log(l) - t - offset) <= 2.0 / l + 1e-12 * t);
    }
    CHECK(std::abs(std::log(isotropic_lambda_oracle(1.0, kGolden, 100.0)) / 100.0 - 1.0) <= 1e-2);
    const double a = 3.0;
    const double la = isotropic_lambda_oracle(a, 0.5, 2.0);
    CHECK(std::abs(a * std::log(la) - 2.0 / la - a * 2.0 - a * std::log(0.5) + 4.0) <= 1e-11);

    for (double l0 : {0.1, 1.0, std::sqrt(kGolden), 10.0}) {
      CHECK(rotation_lambda_oracle(l0, 0.0) == doctest::Approx(l0).epsilon(1e-14));
      // l - t tends to l0 - 2/l0.
      const double l100 = rotation_lambda_oracle(l0, 100.0);
      CHECK(l100 - 100.0 - (l0 - 2.0 / l0) == doctest::Approx(2.0 / l100).epsilon(1e-9));
      if (std::abs(l0 - 2.0 / l0) < 1.0) {
        CHECK(l100 / 100.0 >= 0.99);
        CHECK(l100 / 100.0 <= 1.03);
      }
      for (double t : {0.5, 3.0, 40.0}) {
        const double c = t + l0 - 2.0 / l0;
        const double closed = (c + std::sqrt(c * c + 8.0)) / 2.0;
        CHECK(std::abs(rotation_lambda_oracle(l0, t) - closed) <= 1e-12 * closed);
      }
    }
  }

  TEST_CASE("fit_exponential recovers an exact exponential") {
    std::vector<double> t;
    std::vector<double> v;
    for (int i = 0; i <= 20; ++i) {
      t.push_back(0.5 * i);
      v.push_back(3.0 * std::exp(-0.7 * 0.5 * i));
    }
    const auto fit = fit_exponential(t, v);
    CHECK(fit.rate == doctest::Approx(-0.7).epsilon(1e-12));
    CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.points == 21);
  }

  TEST_CASE("diagnostics on the isotropic example") {
    const auto op = make_isotropic(1.0, 2);
    const auto traj = integrate(op, v2(1, 0), 1.0);
    const auto rep = flow_diagnostics(traj, op);
    CHECK(rep.d0 == doctest::Approx(1.0));
    CHECK_FALSE(rep.d0_estimated);
    CHECK(rep.lambda_monotonicity == 0.0);
    CHECK(rep.speed_monotonicity == 0.0);
    CHECK(rep.zero_distance_monotonicity == 0.0);
    REQUIRE(rep.f_bound_ratio.has_value());
    CHECK(*rep.f_bound_ratio <= 1.0 + 1e-3);
    CHECK(*rep.integral_estimate <= *rep.integral_bound + 1e-3);
    CHECK(rep.all_hard_passed());
    REQUIRE(rep.distance_fit.has_value());
    CHECK(rep.distance_fit->rate < 0.0);
    CHECK(rep.lambda_fit->rate > 0.0);
  }

  TEST_CASE("diagnostics on the rotation have no f fields") {
    const auto op = make_rotation();
    const auto traj = integrate(op, v2(1, 0), 1.0);
    const auto rep = flow_diagnostics(traj, op);
    CHECK_FALSE(rep.f_bound_ratio.has_value());
    CHECK_FALSE(rep.integral_estimate.has_value());
    CHECK_FALSE(rep.checks.empty());
    CHECK(rep.all_hard_passed());
  }

  TEST_CASE("diagnostics on a constant trajectory") {
    const auto op = make_isotropic(1.0, 2);
    Trajectory traj;
    traj.theta = 1.0;
    FlowState s{0.0, v2(1, 0), kGolden, v2(1, 0) / (1.0 + kGolden), 1.0 / kGolden};
    traj.samples = {s, s};
    traj.samples[1].t = 0.0;
    traj.tau = {0.0, 0.0};
    const auto rep = flow_diagnostics(traj, op);
    CHECK(rep.lambda_monotonicity == 0.0);
    CHECK(rep.speed_monotonicity == 0.0);
    CHECK(rep.zero_distance_monotonicity == 0.0);

    traj.samples.pop_back();
    CHECK_THROWS_AS(flow_diagnostics(traj, op), Error);
  }

  TEST_CASE("monotonicity along random trajectories") {
    Gen g(401);
    for (int trial = 0; trial < 6; ++trial) {
      int n = 0;
      const auto op = proxflow::testing::random_operator(g, n);
      FlowConfig cfg;
      cfg.t_end = 3.0;
      const auto traj = integrate(op, g.vec(n, 2.0), g.log_uniform(0.1, 10.0), cfg);
      const auto rep = flow_diagnostics(traj, op);
      for (const auto& c : rep.checks) {
        if (!c.soft) CHECK_MESSAGE(c.passed(), c.name, " violation ", c.violation);
      }
    }
  }
}
