#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "expect_errc.hpp"
#include "noisycp/calibrate.hpp"
#include "oracle.hpp"

namespace noisycp {
namespace {

ScoreParams hps() {
  ScoreParams p;
  p.kind = ScoreKind::HPS;
  return p;
}

LabeledSet worked_example() {
  return LabeledSet::validate(
      ProbabilityMatrix::validate({{0.9, 0.1}, {0.8, 0.2}, {0.7, 0.3}, {0.6, 0.4}}), {0, 0, 1, 0});
}

struct Fuzzed {
  oracle::Rows rows;
  std::vector<int> noisy;
  LabeledSet set;
};

Fuzzed fuzz(std::mt19937_64& rng, std::size_t n, std::size_t k, bool ties) {
  oracle::Rows rows = ties ? oracle::tied_rows(n, k, rng) : oracle::smooth_rows(n, k, rng);
  std::vector<int> noisy = oracle::random_labels(n, k, rng);
  LabeledSet set = LabeledSet::validate(ProbabilityMatrix::validate(rows), noisy);
  return Fuzzed{std::move(rows), std::move(noisy), std::move(set)};
}

TEST(StandardCp, OrderStatistic) {
  const std::vector<double> s = {0.4, 0.1, 0.3, 0.2};
  EXPECT_EQ(standard_cp(s, 0.25).q, 0.3);
  EXPECT_EQ(standard_cp(std::vector<double>{0.5}, 0.1).q, 0.5);
  EXPECT_ERRC(standard_cp(std::vector<double>{}, 0.1), Errc::EmptyScoreList);
}

TEST(StandardCp, UniformScoresConcentrate) {
  double total = 0.0;
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> s(1000);
    for (auto& v : s) v = u(rng);
    const double q = standard_cp(s, 0.1).q;
    total += q;
    inside += q >= 0.88 && q <= 0.92;
  }
  EXPECT_NEAR(total / 200, 0.9, 0.005);
  EXPECT_GE(inside, 180);
}

TEST(QuantileRank, MatchesDirectScan) {
  for (std::size_t n : {1u, 2u, 3u, 7u, 10u, 100u, 999u}) {
    for (double level : {0.05, 0.1, 0.5, 0.7, 0.72144, 0.8, 0.9, 0.92, 0.95, 0.999, 1.0}) {
      std::size_t expected = n;
      for (std::size_t r = 1; r <= n; ++r) {
        if (static_cast<double>(r) / static_cast<double>(n) >= level) {
          expected = r;
          break;
        }
      }
      EXPECT_EQ(quantile_rank(n, level), expected) << n << " " << level;
    }
  }
}

TEST(BuildCurve, TwoSampleExample) {
  // Row 0 has set {noisy label} at q = 0.2, row 1 has an empty set.
  const auto set = LabeledSet::validate(ProbabilityMatrix::validate({{0.8, 0.2}, {0.5, 0.5}}), {0, 1});
  const auto curve = build_curve(set, 0.2, hps(), {0.2});
  EXPECT_DOUBLE_EQ(curve.fn_hat[0], 0.5);
  EXPECT_DOUBLE_EQ(curve.fr_hat[0], 0.25);
  EXPECT_DOUBLE_EQ(curve.fc_hat[0], 0.5625);
}

TEST(BuildCurve, NoNoiseAndFullSets) {
  std::mt19937_64 rng(1);
  const Fuzzed f = fuzz(rng, 30, 4, true);
  const ScoreTable t = ScoreTable::compute(f.set.probs, hps());
  const auto curve = build_curve(t, f.noisy, 0.0, candidate_breakpoints(t, {}));
  for (std::size_t j = 0; j < curve.size(); ++j) EXPECT_EQ(curve.fc_hat[j], curve.fn_hat[j]);
  const auto top = build_curve(t, f.noisy, 0.3, {2.0});
  EXPECT_EQ(top.fn_hat[0], 1.0);
  EXPECT_EQ(top.fr_hat[0], 1.0);
  EXPECT_DOUBLE_EQ(top.fc_hat[0], 1.0);
}

TEST(BuildCurve, MatchesOracleAtEveryBreakpoint) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const auto kind = trial % 2 ? oracle::Kind::APS : oracle::Kind::HPS;
    ScoreParams p;
    p.kind = kind == oracle::Kind::APS ? ScoreKind::APS : ScoreKind::HPS;
    const Fuzzed f = fuzz(rng, 12, 3, trial % 3 == 0);
    const double eps = 0.05 * (trial % 10);
    const ScoreTable t = ScoreTable::compute(f.set.probs, p);
    const auto curve = build_curve(t, f.noisy, eps, candidate_breakpoints(t, {}));
    for (std::size_t j = 0; j < curve.size(); ++j) {
      const auto ref = oracle::evaluate(f.rows, f.noisy, eps, curve.breakpoints[j], kind);
      EXPECT_EQ(curve.fn_hat[j], ref.fn);
      EXPECT_EQ(curve.fr_hat[j], ref.fr);
      EXPECT_NEAR(curve.fc_hat[j], ref.fc, 1e-12);
    }
  }
}

TEST(BuildCurve, MonotoneAndLemma) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t k = 2 + trial % 9;
    const Fuzzed f = fuzz(rng, 40, k, trial % 2 == 0);
    ScoreParams p;
    p.kind = static_cast<ScoreKind>(trial % 3);
    const ScoreTable t = ScoreTable::compute(f.set.probs, p);
    const auto curve = build_curve(t, f.noisy, 0.2, candidate_breakpoints(t, {}));
    for (std::size_t j = 0; j < curve.size(); ++j) {
      EXPECT_LE(std::round(curve.fn_hat[j] * 40.0), std::round(curve.fr_hat[j] * 40.0 * static_cast<double>(k)));
      EXPECT_GE(curve.fn_hat[j], 0.0);
      EXPECT_LE(curve.fr_hat[j], 1.0);
      if (j > 0) {
        EXPECT_GE(curve.fn_hat[j], curve.fn_hat[j - 1]);
        EXPECT_GE(curve.fr_hat[j], curve.fr_hat[j - 1]);
      }
    }
  }
}

TEST(BuildCurve, RejectsBadEpsilon) {
  const auto set = worked_example();
  EXPECT_ERRC(build_curve(set, 1.0, hps(), {0.5}), Errc::EpsilonOutOfRange);
}

TEST(SearchBounds, Levels) {
  const std::vector<double> noisy(100, 0.5);
  const SearchBracket b = search_bracket(noisy, 0.9, 0.2, 100);
  EXPECT_NEAR(b.level1, 0.72 / 0.998, 1e-15);
  EXPECT_NEAR(b.level1, 0.72144, 1e-5);
  EXPECT_NEAR(b.level2, 0.92, 1e-15);
  const SearchBracket clean = search_bracket(noisy, 0.9, 0.0, 100);
  EXPECT_EQ(clean.level1, 0.9);
  EXPECT_EQ(clean.level2, 0.9);
}

TEST(SearchBounds, HandComputedQuantiles) {
  const std::vector<double> s = {0.1, 0.2, 0.4, 0.7};
  const auto [q1, q2] = search_bounds(s, 0.2, 0.2, 2);
  EXPECT_EQ(q1, 0.4);
  EXPECT_EQ(q2, 0.7);
  EXPECT_ERRC(search_bounds(std::vector<double>{}, 0.2, 0.2, 2), Errc::EmptyScoreList);
}

TEST(SearchBounds, NoNoiseCollapsesToStandardCp) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(333);
  for (auto& v : s) v = u(rng);
  const auto [q1, q2] = search_bounds(s, 0.1, 0.0, 5);
  EXPECT_EQ(q1, standard_cp(s, 0.1).q);
  EXPECT_EQ(q2, q1);
}

TEST(NacpUniform, WorkedExample) {
  const auto r = nacp_uniform(worked_example(), 0.2, 0.2, hps());
  EXPECT_EQ(r.q, 0.4);
  EXPECT_DOUBLE_EQ(r.achieved_fc, 0.8125);
  EXPECT_EQ(r.q1, 0.4);
  EXPECT_EQ(r.q2, 0.7);
  EXPECT_EQ(r.method, ThresholdMethod::NACP_Uniform);
  EXPECT_EQ(r.breakpoint_count, 8u);
  EXPECT_FALSE(r.extended_search);

  const auto ref = oracle::nacp({{0.9, 0.1}, {0.8, 0.2}, {0.7, 0.3}, {0.6, 0.4}}, {0, 0, 1, 0}, 0.2, 0.8,
                                oracle::Kind::HPS);
  ASSERT_TRUE(ref.has_value());
  EXPECT_EQ(ref->q, 0.4);
  EXPECT_DOUBLE_EQ(ref->fc, 0.8125);
}

TEST(NacpUniform, NoNoiseEqualsStandardCp) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + trial * 3;
    const std::size_t k = 2 + trial % 7;
    const Fuzzed f = fuzz(rng, n, k, trial % 2 == 0);
    ScoreParams p;
    p.kind = static_cast<ScoreKind>(trial % 3);
    const double alpha = 0.05 + 0.01 * (trial % 20);
    const ScoreTable t = ScoreTable::compute(f.set.probs, p);
    const double expected = standard_cp(t.label_scores(f.noisy), alpha).q;
    EXPECT_EQ(nacp_uniform(f.set, 0.0, alpha, p).q, expected) << "trial " << trial;
  }
}

TEST(NacpUniform, ChosenThresholdInsideBracket) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Fuzzed f = fuzz(rng, 50 + trial, 2 + trial % 10, trial % 2 == 0);
    const auto r = nacp_uniform(f.set, 0.1 + 0.002 * trial, 0.1, hps());
    EXPECT_GE(r.q, r.q1);
    if (!r.extended_search) EXPECT_LE(r.q, r.q2);
    EXPECT_GE(r.achieved_fc, r.target_level);
  }
}

TEST(NacpUniform, MatchesBruteForceOnTinyData) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 6;
    const std::size_t k = 2 + trial % 2;
    const auto kind = trial % 4 < 2 ? oracle::Kind::HPS : oracle::Kind::APS;
    const Fuzzed f = fuzz(rng, n, k, trial % 3 != 0);
    const double eps = 0.1 * (trial % 6);
    const double target = 0.6 + 0.05 * (trial % 7);
    ScoreParams p;
    p.kind = kind == oracle::Kind::APS ? ScoreKind::APS : ScoreKind::HPS;
    const auto ref = oracle::nacp(f.rows, f.noisy, eps, target, kind);
    if (!ref) {
      EXPECT_ERRC(nacp_uniform(ScoreTable::compute(f.set.probs, p), f.noisy, eps, target),
                  Errc::TargetLevelUnreachable);
      continue;
    }
    const auto r = nacp_uniform(ScoreTable::compute(f.set.probs, p), f.noisy, eps, target);
    EXPECT_EQ(r.q, ref->q) << "trial " << trial;
    EXPECT_EQ(r.q1, ref->q1);
    EXPECT_EQ(r.q2, ref->q2);
  }
}

TEST(NacpUniform, RejectsLevelAtOrAboveOne) {
  const ScoreTable t = ScoreTable::compute(worked_example().probs, hps());
  const std::vector<int> noisy = {0, 0, 1, 0};
  EXPECT_ERRC(nacp_uniform(t, noisy, 0.2, 1.0), Errc::InvalidArgument);
}

TEST(NacpGeneral, IdentityMatrixIsStandardCp) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 2 + trial % 5;
    const Fuzzed f = fuzz(rng, 40, k, trial % 2 == 0);
    const ScoreTable t = ScoreTable::compute(f.set.probs, hps());
    const double expected = standard_cp(t.label_scores(f.noisy), 0.1).q;
    EXPECT_EQ(nacp_general(f.set, Matrix::identity(k), 0.1, hps()).q, expected);
  }
}

TEST(NacpGeneral, WorkedExampleWithUniformMatrix) {
  const auto r = nacp_general(worked_example(), uniform_noise_as_matrix(0.2, 2).p, 0.2, hps());
  EXPECT_EQ(r.q, 0.4);
  EXPECT_EQ(r.method, ThresholdMethod::NACP_General);
}

TEST(NacpGeneral, UniformMatrixAgreesWithUniformCurve) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = std::vector<std::size_t>{2, 5, 10}[trial % 3];
    const Fuzzed f = fuzz(rng, 200, k, trial % 2 == 0);
    const double eps = 0.05 + 0.03 * trial;
    const ScoreTable t = ScoreTable::compute(f.set.probs, ScoreParams{});
    const auto bps = candidate_breakpoints(t, {});
    const auto uniform = build_curve(t, f.noisy, eps, bps);
    const auto general = build_curve_general(t, f.noisy, invert_noise_matrix(uniform_noise_as_matrix(eps, k).p), bps);
    for (std::size_t j = 0; j < bps.size(); ++j) EXPECT_NEAR(general.fc_hat[j], uniform.fc_hat[j], 1e-10);
  }
}

TEST(NacpGeneral, LuInverseAgreesWithUniformCurve) {
  std::mt19937_64 rng(10);
  const Fuzzed f = fuzz(rng, 300, 5, false);
  const ScoreTable t = ScoreTable::compute(f.set.probs, ScoreParams{});
  const auto bps = candidate_breakpoints(t, {});
  InvertedNoise lu;
  lu.p_inverse = lu_inverse(uniform_noise_as_matrix(0.3, 5).p);
  const auto general = build_curve_general(t, f.noisy, lu, bps);
  const auto uniform = build_curve(t, f.noisy, 0.3, bps);
  for (std::size_t j = 0; j < bps.size(); ++j) EXPECT_NEAR(general.fc_hat[j], uniform.fc_hat[j], 1e-10);
}

TEST(SearchCurve, MultipleCrossings) {
  CalibrationCurve c;
  c.breakpoints = {0.1, 0.2, 0.3, 0.4, 0.5};
  c.fc_hat = {0.5, 0.91, 0.85, 0.92, 1.0};
  c.fn_hat = c.fr_hat = c.fc_hat;
  EXPECT_EQ(search_curve(c, 0.9, 0.1, 0.5, false).q, 0.2);
  EXPECT_EQ(search_curve(c, 0.9, 0.1, 0.5, true).q, 0.4);
  EXPECT_EQ(search_curve(c, 0.9, 0.3, 0.5, false).q, 0.4);
  const auto ext = search_curve(c, 0.95, 0.1, 0.4, false);
  EXPECT_EQ(ext.q, 0.5);
  EXPECT_TRUE(ext.extended_search);
  c.fc_hat.back() = 0.94;
  EXPECT_ERRC(search_curve(c, 0.95, 0.1, 0.5, false), Errc::TargetLevelUnreachable);
}

TEST(CandidateBreakpoints, GridAboveBudget) {
  std::mt19937_64 rng(11);
  const Fuzzed f = fuzz(rng, 100, 10, false);
  const ScoreTable t = ScoreTable::compute(f.set.probs, ScoreParams{});
  CurveOptions opts;
  opts.grid_budget = 500;
  opts.grid_resolution = 64;
  BreakpointMode mode = BreakpointMode::Exact;
  const auto grid = candidate_breakpoints(t, opts, &mode);
  EXPECT_EQ(mode, BreakpointMode::Grid);
  EXPECT_EQ(grid.size(), 64u);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_EQ(grid.back(), *std::max_element(t.values().begin(), t.values().end()));

  SearchOptions search;
  search.curve = opts;
  const auto r = nacp_uniform(t, f.noisy, 0.2, 0.9, search);
  EXPECT_EQ(r.breakpoint_mode, BreakpointMode::Grid);
  EXPECT_GE(r.achieved_fc, 0.9);
}

TEST(ThresholdOrder, SmallRandomLabelCoverageMeansSmallerThreshold) {
  std::mt19937_64 rng(12);
  std::size_t small_fr = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 2 + trial % 12;
    const Fuzzed f = fuzz(rng, 30 + 7 * (trial % 50), k, trial % 3 == 0);
    ScoreParams p;
    p.kind = static_cast<ScoreKind>(trial % 3);
    const double alpha = 0.05 + 0.05 * (trial % 4);
    const double eps = 0.05 + 0.05 * (trial % 5);
    const ScoreTable t = ScoreTable::compute(f.set.probs, p);
    const double noisy_q = standard_cp(t.label_scores(f.noisy), alpha, ThresholdMethod::NoisyCP).q;
    const auto r = nacp_uniform(t, f.noisy, eps, 1.0 - alpha);
    if (random_label_coverage(t, noisy_q) <= 1.0 - alpha) {
      ++small_fr;
      EXPECT_LE(r.q, noisy_q) << "trial " << trial;
    }
    if (r.q > noisy_q) EXPECT_GT(random_label_coverage(t, noisy_q), 1.0 - alpha);
  }
  EXPECT_GE(small_fr, 30u);
}

TEST(ThresholdOrder, TiedTopScoresBreakTheConverse) {
  // Every row's last APS score is exactly 1, so noisy-label coverage jumps
  // from 2/3 to 1 at q = 1 while random-label coverage there is 1.
  const auto set = LabeledSet::validate(
      ProbabilityMatrix::validate({{0.5, 0.5}, {0.5, 0.5}, {0.6, 0.4}}), {0, 1, 1});
  const ScoreTable t = ScoreTable::compute(set.probs, ScoreParams{});
  const double noisy_q = standard_cp(t.label_scores(set.labels), 0.1).q;
  EXPECT_EQ(noisy_q, 1.0);
  EXPECT_GT(random_label_coverage(t, noisy_q), 0.9);
  EXPECT_LE(nacp_uniform(t, set.labels, 0.2, 0.9).q, noisy_q);
}

}  // namespace
}  // namespace noisycp
