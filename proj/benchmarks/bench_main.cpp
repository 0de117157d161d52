#include <benchmark/benchmark.h>

#include "climfuse/covariance.hpp"
#include "climfuse/sampler.hpp"
#include "climfuse/simulate.hpp"

using namespace climfuse;

static void BM_BuildCorrelation(benchmark::State& state) {
  const Grid grid = Grid::regular(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(buildCorrelation(grid, CorrelationSpec{0.4}));
  state.SetLabel(std::to_string(grid.size()) + " sites");
}
BENCHMARK(BM_BuildCorrelation)->Arg(8)->Arg(14)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_Factor(benchmark::State& state) {
  const Grid grid = Grid::regular(static_cast<int>(state.range(0)));
  const Eigen::MatrixXd c = buildCorrelation(grid, CorrelationSpec{0.4});
  for (auto _ : state) benchmark::DoNotOptimize(factor(c));
}
BENCHMARK(BM_Factor)->Arg(8)->Arg(14)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_Sweep(benchmark::State& state) {
  SimulationDesign design = deskDesign();
  design.gridSide = static_cast<int>(state.range(0));
  design.muH = fixtureConsensusH(design.grid());
  design.muF = fixtureConsensusF(design.grid());
  const SyntheticSample sample = generate(design, 1);
  ChainConfig config;
  config.iterations = 10;
  config.burnIn = 5;
  GibbsSampler sampler(sample.data, PriorConfig{}, config);
  for (auto _ : state) sampler.sweep();
}
BENCHMARK(BM_Sweep)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
