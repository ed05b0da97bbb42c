#include <benchmark/benchmark.h>

#include "fbas/forest.hpp"
#include "fbas/rng.hpp"

namespace {

void BM_forest_fit(benchmark::State& state) {
  fbas::Rng rng(3);
  const int n = 72, p = 38;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
    y[i] = rng.normal();
  }
  fbas::forest::ForestParams params;
  params.n_trees = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(fbas::forest::Forest::fit(X, y, params, 5));
}

}  // namespace

BENCHMARK(BM_forest_fit)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
