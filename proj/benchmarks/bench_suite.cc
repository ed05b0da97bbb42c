#include <benchmark/benchmark.h>

#include "fbas/bench.hpp"
#include "fbas/rng.hpp"

namespace {

void BM_evaluate(benchmark::State& state) {
  auto problem = fbas::bench::make_problem(static_cast<int>(state.range(0)), 1, 5);
  fbas::Rng rng(7);
  const Eigen::VectorXd x = rng.uniform_vector(5, -5.0, 5.0);
  for (auto _ : state) benchmark::DoNotOptimize(problem.evaluate(x));
}

void BM_make_problem(benchmark::State& state) {
  int iid = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(fbas::bench::make_problem(6, ++iid, 5));
}

}  // namespace

BENCHMARK(BM_evaluate)->DenseRange(1, 10);
BENCHMARK(BM_make_problem);
