#include <benchmark/benchmark.h>

#include <random>

#include "proxflow/continuous_flow.hpp"
#include "proxflow/large_step_pp.hpp"
#include "proxflow/lambda_solver.hpp"
#include "proxflow/linalg.hpp"
#include "proxflow/operators.hpp"
#include "proxflow/prox_newton.hpp"

using namespace proxflow;

namespace {

Matrix random_psd(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Matrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = nd(rng);
  return b * b.transpose() / n;
}

Vector ones(int n) { return Vector::Ones(n); }

void BM_ShiftedSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix h = random_psd(n, 1);
  const Vector b = ones(n);
  for (auto _ : state) benchmark::DoNotOptimize(shifted_solve(h, 0.5, b));
}
BENCHMARK(BM_ShiftedSolve)->RangeMultiplier(4)->Range(4, 256);

void BM_SolveLambdaQuadratic(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MonotoneOperator op = make_quadratic(random_psd(n, 2), Vector::Zero(n));
  const Vector x = ones(n);
  for (auto _ : state) benchmark::DoNotOptimize(solve_lambda(op, 1.0, x));
}
BENCHMARK(BM_SolveLambdaQuadratic)->RangeMultiplier(4)->Range(2, 128);

void BM_SolveLambdaLogistic(benchmark::State& state) {
  const MonotoneOperator op = make_logistic1d();
  const Vector x = Vector::Constant(1, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_lambda(op, 1.0, x));
}
BENCHMARK(BM_SolveLambdaLogistic);

void BM_IntegrateRotation(benchmark::State& state) {
  const MonotoneOperator op = make_rotation();
  const Vector x0 = (Vector(2) << 1.0, 0.0).finished();
  FlowConfig cfg;
  cfg.t_end = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(integrate(op, x0, 1.0, cfg));
}
BENCHMARK(BM_IntegrateRotation)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_RunPPIllConditioned(benchmark::State& state) {
  Matrix q = Matrix::Zero(2, 2);
  q(0, 0) = 1.0;
  q(1, 1) = 1e-6;
  const MonotoneOperator op = make_quadratic(q, Vector::Zero(2));
  const Vector x0 = ones(2);
  PPConfig cfg;
  cfg.max_iter = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_pp(op, x0, cfg));
}
BENCHMARK(BM_RunPPIllConditioned)->Arg(50)->Arg(200);

void BM_RunProxNewtonLogistic(benchmark::State& state) {
  const MonotoneOperator op = make_logistic1d();
  const Vector x0 = Vector::Constant(1, 20.0);
  NewtonConfig cfg;
  cfg.sigma_u = 0.5;
  cfg.L = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(run_prox_newton(op, x0, cfg));
}
BENCHMARK(BM_RunProxNewtonLogistic);

}  // namespace

BENCHMARK_MAIN();
