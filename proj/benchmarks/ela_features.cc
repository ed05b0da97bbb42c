#include <benchmark/benchmark.h>

#include "fbas/bench.hpp"
#include "fbas/ela.hpp"

namespace {

void BM_feature_families(benchmark::State& state) {
  auto problem = fbas::bench::make_problem(3, 1, 5);
  const auto sample = fbas::ela::uniform_sample(problem, static_cast<int>(state.range(0)), 11);
  for (auto _ : state) benchmark::DoNotOptimize(fbas::ela::compute_features(sample));
}

void BM_uniform_sample(benchmark::State& state) {
  auto problem = fbas::bench::make_problem(3, 1, 5);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        fbas::ela::uniform_sample(problem, static_cast<int>(state.range(0)), 11));
}

}  // namespace

BENCHMARK(BM_feature_families)->Arg(250)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_uniform_sample)->Arg(250)->Arg(2000);
