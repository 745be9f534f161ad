#include <filesystem>
#include <string>

#include <benchmark/benchmark.h>

#include "tribogen/dataset.hpp"
#include "tribogen/rng.hpp"

namespace fs = std::filesystem;
using namespace tribogen;

namespace {

dataset::GenerationConfig bench_config(std::uint64_t recipes) {
  dataset::GenerationConfig config;
  config.recipe_count = recipes;
  config.base_seed = 99;
  config.shard_size = 2048;
  return config;
}

fs::path scratch_dir() {
  return fs::temp_directory_path() / "tribogen_bench";
}

}  // namespace

// Single-sample simulation cost across the asperity-count grid.
static void BM_GenerateSample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const contact::PhysicalConstants constants;
  const auto bounds = dataset::BoundsTable::defaults();
  const auto delta_grid = contact::default_delta_grid();
  const auto p_grid = contact::default_p_grid();

  Rng rng(7);
  double unit[contact::kParamCount];
  for (double& u : unit) u = 0.2 + 0.6 * rng.uniform();
  const auto theta =
      dataset::enforce_weight_constraint(dataset::map_to_bounds(unit, bounds));

  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto sample = dataset::generate_sample(theta, n, constants,
                                                 delta_grid, p_grid, ++seed);
    benchmark::DoNotOptimize(sample.law.f_values.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GenerateSample)->Arg(30)->Arg(400)->Arg(1500)->Arg(12000)
    ->Unit(benchmark::kMillisecond);

// End-to-end shard generation throughput at a given worker count.
static void BM_GenerateDataset(benchmark::State& state) {
  const int workers = static_cast<int>(state.range(0));
  const auto config = bench_config(64);  // 64 recipes x 16 N = 1024 samples

  for (auto _ : state) {
    const auto dir = scratch_dir();
    fs::remove_all(dir);
    const auto manifest =
        dataset::generate_dataset(config, dir.string(), workers);
    benchmark::DoNotOptimize(manifest.shards.size());
    state.PauseTiming();
    fs::remove_all(dir);
    state.ResumeTiming();
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(config.total_samples()));
}
BENCHMARK(BM_GenerateDataset)->Arg(1)->Arg(2)->Arg(4)->Arg(8)
    ->Unit(benchmark::kMillisecond)->MeasureProcessCPUTime()
    ->UseRealTime();

BENCHMARK_MAIN();
