// Serial references vs the OpenMP kernels: falsifier trials and seed sweeps.

#include <benchmark/benchmark.h>

#include <filesystem>
#include <string>

#include "adavar/confidence.hpp"
#include "adavar/harness.hpp"

namespace {

adavar::FalsifierConfig falsifier_config() {
  adavar::FalsifierConfig cfg;
  cfg.dim = 2;
  cfg.steps = 500;
  cfg.trials = 200;
  cfg.noise.levels = {0.1, 0.5};
  cfg.noise.bound = 0.5;
  cfg.seed = 7;
  return cfg;
}

void BM_FalsifierSerial(benchmark::State& state) {
  const auto cfg = falsifier_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(adavar::martingale_falsifier_serial(cfg));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.trials));
}

void BM_FalsifierOpenMP(benchmark::State& state) {
  const auto cfg = falsifier_config();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(adavar::martingale_falsifier(cfg, threads));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.trials));
}

const char* kSweepConfig = R"({
  "kind": "bandit", "name": "bench", "K": 2000, "d": 3,
  "seeds": [1, 2, 3, 4, 5, 6, 7, 8],
  "instance": {"arms": "fresh_sphere", "n_arms": 10, "sigma": {"schedule": "constant", "levels": [0.3]}},
  "learners": ["save", "oful"]
})";

std::filesystem::path bench_dir(const std::string& tag) {
  return std::filesystem::temp_directory_path() / ("adavar_bench_" + tag);
}

void BM_SweepSerial(benchmark::State& state) {
  const auto cfg = adavar::parse_config_text(kSweepConfig, "bench");
  adavar::SweepOptions opts;
  opts.out_dir = bench_dir("serial");
  for (auto _ : state) {
    benchmark::DoNotOptimize(adavar::run_sweep_serial(cfg, opts));
  }
  std::filesystem::remove_all(opts.out_dir);
}

void BM_SweepOpenMP(benchmark::State& state) {
  const auto cfg = adavar::parse_config_text(kSweepConfig, "bench");
  adavar::SweepOptions opts;
  opts.out_dir = bench_dir("omp");
  opts.jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(adavar::run_sweep(cfg, opts));
  }
  std::filesystem::remove_all(opts.out_dir);
}

}  // namespace

BENCHMARK(BM_FalsifierSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FalsifierOpenMP)->Arg(2)->Arg(4)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepOpenMP)->Arg(2)->Arg(4)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
