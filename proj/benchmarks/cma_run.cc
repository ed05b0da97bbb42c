#include <benchmark/benchmark.h>

#include "fbas/bench.hpp"
#include "fbas/modcma.hpp"

namespace {

void BM_cma_run(benchmark::State& state) {
  const auto config =
      fbas::modcma::ModuleConfig::from_code(state.range(0) == 0 ? "00000000000" : "10101010100");
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto problem = fbas::bench::make_problem(6, 1, 5);
    benchmark::DoNotOptimize(
        fbas::modcma::run(problem, config, fbas::modcma::CmaParams{}, 500, ++seed));
  }
}

}  // namespace

BENCHMARK(BM_cma_run)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
