// Serial reference vs OpenMP kernels.
#include <benchmark/benchmark.h>

#include "survbias/data.hpp"
#include "survbias/evaluation.hpp"
#include "survbias/learners.hpp"
#include "survbias/rng.hpp"

using namespace survbias;

namespace {

const Dataset& bench_data() {
  static const Dataset ds = synth_generate(20000, 20, 1.0, 0.75, 11);
  return ds;
}

Execution exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void BM_ForestFit(benchmark::State& state) {
  EnsembleParams p = EnsembleParams::random_forest();
  p.n_trees = 32;
  for (auto _ : state) benchmark::DoNotOptimize(fit(p, bench_data(), exec_of(state)));
}

void BM_BoostedFit(benchmark::State& state) {
  EnsembleParams p = EnsembleParams::gbdt();
  p.n_trees = 20;
  for (auto _ : state) benchmark::DoNotOptimize(fit(p, bench_data(), exec_of(state)));
}

void BM_Predict(benchmark::State& state) {
  EnsembleParams p = EnsembleParams::random_forest();
  p.n_trees = 32;
  static const TrainedModel m = fit(p, bench_data());
  for (auto _ : state) benchmark::DoNotOptimize(m.predict_proba(bench_data().X, exec_of(state)));
}

std::vector<double> bench_scores() {
  Rng rng(5);
  std::vector<double> s(bench_data().size());
  for (auto& v : s) v = rng.uniform();
  return s;
}

void BM_SweepHistogram(benchmark::State& state) {
  static const auto scores = bench_scores();
  const std::vector<double> costs{1, 2, 3, 4, 5};
  for (auto _ : state) benchmark::DoNotOptimize(sweep(scores, bench_data().y, 0.0001, costs, exec_of(state)));
}

void BM_SweepNaive(benchmark::State& state) {
  static const auto scores = bench_scores();
  const std::vector<double> costs{1, 2, 3, 4, 5};
  for (auto _ : state) benchmark::DoNotOptimize(sweep_naive(scores, bench_data().y, 0.001, costs, exec_of(state)));
}

}  // namespace

// Arg 0 = serial, 1 = OpenMP
BENCHMARK(BM_ForestFit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BoostedFit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Predict)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepHistogram)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepNaive)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
