#include <benchmark/benchmark.h>

#include <otkhorn/accel.hpp>
#include <otkhorn/apd.hpp>
#include <otkhorn/classic.hpp>
#include <otkhorn/data.hpp>
#include <otkhorn/kernel.hpp>
#include <otkhorn/rng.hpp>
#include <otkhorn/rounding.hpp>

using namespace otk;

namespace {

struct Fixture {
  CostMatrix cost;
  Measure r;
  Measure c;
};

Fixture make_fixture(int side) {
  return Fixture{l1_ground_cost(side),
                 gen_synthetic_image(1, side).to_measure(),
                 gen_synthetic_image(2, side).to_measure()};
}

void BM_KernelMarginals(benchmark::State& state) {
  const auto fx = make_fixture(static_cast<int>(state.range(0)));
  DualKernel kernel(fx.cost, 10.0);
  DualPotentials p = DualPotentials::zeros(kernel.size());
  Vector rows, cols;
  for (auto _ : state) {
    kernel.log_both_sums(p, rows, cols);
    benchmark::DoNotOptimize(rows.data());
  }
}
BENCHMARK(BM_KernelMarginals)->Arg(10)->Arg(20);

void BM_SinkhornIteration(benchmark::State& state) {
  const auto fx = make_fixture(static_cast<int>(state.range(0)));
  SolverConfig cfg;
  cfg.eps_prime = std::numeric_limits<double>::min();
  for (auto _ : state) {
    cfg.max_iter = 4;
    auto res = sinkhorn(fx.cost, 10.0, fx.r, fx.c, cfg);
    benchmark::DoNotOptimize(res.report.iterations);
  }
}
BENCHMARK(BM_SinkhornIteration)->Arg(10)->Arg(20);

void BM_GreenkhornIterations(benchmark::State& state) {
  const auto fx = make_fixture(static_cast<int>(state.range(0)));
  SolverConfig cfg;
  cfg.eps_prime = std::numeric_limits<double>::min();
  for (auto _ : state) {
    cfg.max_iter = 512;  // coordinate updates
    auto res = greenkhorn(fx.cost, 10.0, fx.r, fx.c, cfg);
    benchmark::DoNotOptimize(res.report.iterations);
  }
}
BENCHMARK(BM_GreenkhornIterations)->Arg(10)->Arg(20);

void BM_GandkhornIterations(benchmark::State& state) {
  const auto fx = make_fixture(static_cast<int>(state.range(0)));
  SolverConfig cfg;
  cfg.eps_prime = std::numeric_limits<double>::min();
  cfg.seed = 3;
  for (auto _ : state) {
    cfg.max_iter = 32;
    auto res = gandkhorn(fx.cost, 10.0, fx.r, fx.c, cfg);
    benchmark::DoNotOptimize(res.report.iterations);
  }
}
BENCHMARK(BM_GandkhornIterations)->Arg(10);

void BM_Rounding(benchmark::State& state) {
  const auto fx = make_fixture(static_cast<int>(state.range(0)));
  const int n = fx.cost.size();
  CounterRng rng(7);
  Matrix x(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) x(i, j) = rng.uniform01() / (n * n);
  const TransportPlan plan{x, false};
  for (auto _ : state) {
    auto rounded = round_to_feasible(plan, fx.r, fx.c);
    benchmark::DoNotOptimize(rounded.entries.data());
  }
}
BENCHMARK(BM_Rounding)->Arg(10)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
