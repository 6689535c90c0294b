// Serial reference against the OpenMP path for the two parallel kernels.
#include <benchmark/benchmark.h>

#include <numeric>

#include "slicesim/parallel.hpp"
#include "slicesim/parser.hpp"

using namespace slicesim;

namespace {

void sweep(benchmark::State& state, Execution exec) {
  ExperimentConfig c;
  c.sweep_stop = 20000;
  c.sweep_step = 2000;
  const auto specs = plan(c);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_points(specs, c, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(specs.size()));
}

void replicas(benchmark::State& state, Execution exec) {
  const auto model = std::make_shared<const CompiledModel>(
      parse("A_1 = (a, 1).A_2; A_2 = (b, 3).A_1; B_1 = (a, 2).B_2; B_2 = (c, 1).B_1; A_1[20] <a> B_1[15]"));
  std::vector<std::uint64_t> seeds(16);
  std::iota(seeds.begin(), seeds.end(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_replicas(model, {2000.0, 0}, seeds, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seeds.size()));
}

}  // namespace

BENCHMARK_CAPTURE(sweep, serial, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, parallel, Execution::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(replicas, serial, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(replicas, parallel, Execution::Parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
