#include <gtest/gtest.h>

#include <sstream>

#include "expect_errc.hpp"
#include "noisycp/harness.hpp"
#include "noisycp/synth.hpp"

namespace noisycp {
namespace {

NoisyPool make_pool(std::size_t k, std::size_t n, double mu, double eps, std::uint64_t seed) {
  SynthConfig c;
  c.k = k;
  c.n = n;
  c.signal_mu = mu;
  c.seed = seed;
  LabeledSet data = generate(c);
  auto noisy = inject_noise(data.labels, k, UniformNoise{eps}, seed);
  return NoisyPool::validate(std::move(data.probs), std::move(data.labels), std::move(noisy));
}

TEST(CoverageAndSize, FullAndEmptySets) {
  const auto set = LabeledSet::validate(ProbabilityMatrix::validate({{0.5, 0.3, 0.2}, {0.2, 0.2, 0.6}}), {1, 2});
  ScoreParams hps;
  hps.kind = ScoreKind::HPS;
  const auto full = coverage_and_size(set, 1.0, hps);
  EXPECT_EQ(full.coverage, 1.0);
  EXPECT_EQ(full.avg_size, 3.0);
  const auto empty = coverage_and_size(set, 0.1, hps);
  EXPECT_EQ(empty.coverage, 0.0);
  EXPECT_EQ(empty.avg_size, 0.0);
}

TEST(CoverageAndSize, WorkedExampleAgainstNoisyLabels) {
  const auto set = LabeledSet::validate(
      ProbabilityMatrix::validate({{0.9, 0.1}, {0.8, 0.2}, {0.7, 0.3}, {0.6, 0.4}}), {0, 0, 1, 0});
  ScoreParams hps;
  hps.kind = ScoreKind::HPS;
  const auto r = coverage_and_size(set, 0.4, hps);
  EXPECT_DOUBLE_EQ(r.avg_size, 1.0);
  EXPECT_DOUBLE_EQ(r.coverage, 0.75);
}

TEST(EvalMethod, NamesRoundTrip) {
  for (EvalMethod m : all_eval_methods()) EXPECT_EQ(parse_eval_method(eval_method_name(m)), m);
  EXPECT_ERRC(parse_eval_method("bogus"), Errc::InvalidArgument);
}

TEST(ExperimentConfig, Validation) {
  ExperimentConfig c;
  c.n_splits = 0;
  EXPECT_ERRC(c.validate(), Errc::InvalidConfig);
  c = ExperimentConfig{};
  c.split_fraction = 1.0;
  EXPECT_ERRC(c.validate(), Errc::InvalidConfig);
  c = ExperimentConfig{};
  c.noise = GeneralNoise{Matrix::identity(3)};
  EXPECT_ERRC(c.validate(), Errc::InvalidConfig);
  c.methods = {EvalMethod::Oracle, EvalMethod::NRCP_noDelta};
  EXPECT_NO_THROW(c.validate());
}

TEST(RunExperiment, OracleCoverageNearTarget) {
  const NoisyPool pool = make_pool(10, 10000, 2.0, 0.2, 3);
  ExperimentConfig c;
  c.methods = {EvalMethod::Oracle, EvalMethod::NoisyCP, EvalMethod::NRCP_noDelta, EvalMethod::NACP};
  c.n_splits = 200;
  c.seed = 4;
  const TrialReport r = run_experiment(pool, c);
  EXPECT_EQ(r.n_calibration, 5000u);
  EXPECT_EQ(r.n_test, 5000u);
  const auto* oracle = r.find(EvalMethod::Oracle);
  ASSERT_NE(oracle, nullptr);
  EXPECT_EQ(oracle->completed, 200u);
  EXPECT_GE(oracle->mean_coverage, 0.89);
  EXPECT_LE(oracle->mean_coverage, 0.91);
  const auto* nrcp = r.find(EvalMethod::NRCP_noDelta);
  EXPECT_GE(nrcp->mean_coverage, 0.885);
  EXPECT_LE(nrcp->mean_coverage, 0.915);
  EXPECT_GT(r.find(EvalMethod::NoisyCP)->mean_coverage, oracle->mean_coverage);
  EXPECT_GE(r.find(EvalMethod::NACP)->mean_coverage, nrcp->mean_coverage);

  EXPECT_EQ(r.order_checks, 200u);
  EXPECT_EQ(r.order_violations, 0u);
  EXPECT_EQ(r.delta_checks, 200u);
  EXPECT_EQ(r.delta_violations, 0u);
  for (const auto& m : r.methods) {
    EXPECT_GE(m.mean_coverage, 0.0);
    EXPECT_LE(m.mean_coverage, 1.0);
    EXPECT_GE(m.mean_size, 0.0);
    EXPECT_LE(m.mean_size, 10.0);
  }
}

TEST(RunExperiment, DeterministicAcrossThreads) {
  const NoisyPool pool = make_pool(8, 1500, 2.0, 0.2, 5);
  ExperimentConfig c;
  c.n_splits = 12;
  c.seed = 6;
  c.acnl_mc_samples = 200;
  c.keep_split_records = true;
  const TrialReport a = run_experiment(pool, c);
  c.threads = 3;
  const TrialReport b = run_experiment(pool, c);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].q, b.records[i].q);
    EXPECT_EQ(a.records[i].coverage, b.records[i].coverage);
    EXPECT_EQ(a.records[i].size, b.records[i].size);
  }
  std::ostringstream ta, tb;
  write_report_table(ta, a);
  write_report_table(tb, b);
  EXPECT_EQ(ta.str(), tb.str());
}

TEST(RunExperiment, TrivialCorrectionsGiveFullSets) {
  const NoisyPool pool = make_pool(50, 2000, 2.0, 0.2, 7);
  ExperimentConfig c;
  c.methods = {EvalMethod::ACNL_adjusted, EvalMethod::CRCP_adjusted};
  c.n_splits = 5;
  c.acnl_mc_samples = 200;
  const TrialReport r = run_experiment(pool, c);
  const auto* acnl = r.find(EvalMethod::ACNL_adjusted);
  EXPECT_EQ(acnl->trivial_rate, 1.0);
  EXPECT_EQ(acnl->mean_size, 50.0);
  EXPECT_EQ(acnl->mean_coverage, 1.0);
}

TEST(RunExperiment, GeneralNoiseMatrix) {
  SynthConfig sc;
  sc.k = 3;
  sc.n = 3000;
  sc.signal_mu = 2.0;
  LabeledSet data = generate(sc);
  const Matrix p(3, 3, {0.8, 0.1, 0.1, 0.2, 0.7, 0.1, 0.0, 0.1, 0.9});
  auto noisy = inject_noise(data.labels, 3, GeneralNoise{p}, 2);
  const NoisyPool pool = NoisyPool::validate(std::move(data.probs), std::move(data.labels), std::move(noisy));
  ExperimentConfig c;
  c.methods = {EvalMethod::Oracle, EvalMethod::NRCP_noDelta, EvalMethod::CRCP_adjusted};
  c.noise = GeneralNoise{p};
  c.n_splits = 40;
  const TrialReport r = run_experiment(pool, c);
  EXPECT_EQ(r.order_checks, 0u);
  EXPECT_NEAR(r.find(EvalMethod::NRCP_noDelta)->mean_coverage, 0.9, 0.03);
  std::ostringstream csv;
  write_split_csv(csv, r);
  EXPECT_EQ(csv.str().substr(0, 6), "split,");
}

}  // namespace
}  // namespace noisycp
