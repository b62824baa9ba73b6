#include <benchmark/benchmark.h>

#include "noisycp/calibrate.hpp"
#include "noisycp/guarantees.hpp"
#include "noisycp/linalg.hpp"
#include "noisycp/scores.hpp"
#include "noisycp/synth.hpp"

namespace {

using namespace noisycp;

LabeledSet make_data(std::size_t n, std::size_t k) {
  SynthConfig config;
  config.n = n;
  config.k = k;
  config.signal_mu = 3.0;
  config.seed = 11;
  return generate(config);
}

void BM_ScoreTable(benchmark::State& state) {
  const LabeledSet data = make_data(static_cast<std::size_t>(state.range(0)), 100);
  ScoreParams params;
  params.kind = static_cast<ScoreKind>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ScoreTable::compute(data.probs, params));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreTable)->Args({10'000, 0})->Args({10'000, 1})->Args({10'000, 2});

void BM_BuildCurve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const LabeledSet data = make_data(n, k);
  const std::vector<int> noisy = inject_noise(data.labels, k, UniformNoise{0.2}, 3);
  const ScoreTable table = ScoreTable::compute(data.probs, ScoreParams{});
  const std::vector<double> bps = candidate_breakpoints(table, CurveOptions{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_curve(table, noisy, 0.2, bps));
  }
}
BENCHMARK(BM_BuildCurve)->Args({1'000, 10})->Args({10'000, 100})->Unit(benchmark::kMillisecond);

void BM_NacpUniform(benchmark::State& state) {
  const LabeledSet data = make_data(10'000, 100);
  const std::vector<int> noisy = inject_noise(data.labels, 100, UniformNoise{0.2}, 3);
  const ScoreTable table = ScoreTable::compute(data.probs, ScoreParams{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(nacp_uniform(table, noisy, 0.2, 0.9));
  }
}
BENCHMARK(BM_NacpUniform)->Unit(benchmark::kMillisecond);

void BM_CnEstimate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(c_n_estimate(n, 1'000, 5));
  }
}
BENCHMARK(BM_CnEstimate)->Arg(1'000)->Arg(25'000)->Unit(benchmark::kMillisecond);

void BM_InvertNoise(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  Matrix p = uniform_noise_as_matrix(0.2, k).p;
  p(0, 1) += 0.01;
  p(0, 0) -= 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(invert_noise_matrix(p));
  }
}
BENCHMARK(BM_InvertNoise)->Arg(10)->Arg(100)->Arg(1'000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
