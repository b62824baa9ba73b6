#include "noisycp/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "noisycp/error.hpp"

namespace noisycp {
namespace {

void require_target(double target_level) {
  if (!(target_level > 0.0 && target_level < 1.0)) {
    throw Error(Errc::InvalidArgument,
                "target coverage level must lie in (0,1), got " + std::to_string(target_level) +
                    "; levels >= 1 mean the trivial all-classes set");
  }
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0,1)");
}

void require_sorted(const std::vector<double>& breakpoints) {
  if (breakpoints.empty()) throw Error(Errc::InvalidArgument, "no breakpoints");
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end())) {
    throw Error(Errc::InvalidArgument, "breakpoints must be sorted ascending");
  }
}

// Compensated running sum (Neumaier), so prefix sums over ~10^6 weights stay
// within a few ulps of the exact value.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

// Histogram index of a score: the first breakpoint >= v, i.e. the first
// threshold whose prediction set contains the class.
std::size_t bin_of(const std::vector<double>& breakpoints, double v) {
  return static_cast<std::size_t>(
      std::lower_bound(breakpoints.begin(), breakpoints.end(), v) - breakpoints.begin());
}

// Shared part of both curve builders: cumulative noisy-label and
// all-class counts per breakpoint.
CalibrationCurve count_curve(const ScoreTable& scores, std::span<const int> noisy_labels,
                             std::vector<double> breakpoints) {
  require_sorted(breakpoints);
  if (noisy_labels.size() != scores.rows()) {
    throw Error(Errc::InvalidArgument, "label count does not match score table rows");
  }
  if (scores.rows() == 0) throw Error(Errc::EmptyScoreList, "calibration set is empty");
  validate_labels(noisy_labels, scores.classes());

  const std::size_t m = breakpoints.size();
  const std::size_t n = scores.rows();
  const std::size_t k = scores.classes();
  std::vector<std::uint64_t> noisy_hist(m + 1, 0);
  std::vector<std::uint64_t> total_hist(m + 1, 0);
  for (double v : scores.values()) ++total_hist[bin_of(breakpoints, v)];
  for (std::size_t i = 0; i < n; ++i) {
    ++noisy_hist[bin_of(breakpoints, scores(i, static_cast<std::size_t>(noisy_labels[i])))];
  }

  CalibrationCurve curve;
  curve.samples = n;
  curve.classes = k;
  curve.fn_hat.resize(m);
  curve.fr_hat.resize(m);
  curve.fc_hat.resize(m);
  const auto dn = static_cast<double>(n);
  const auto dnk = static_cast<double>(n * k);
  std::uint64_t noisy = 0;
  std::uint64_t total = 0;
  for (std::size_t j = 0; j < m; ++j) {
    noisy += noisy_hist[j];
    total += total_hist[j];
    curve.fn_hat[j] = static_cast<double>(noisy) / dn;
    curve.fr_hat[j] = static_cast<double>(total) / dnk;
  }
  curve.breakpoints = std::move(breakpoints);
  return curve;
}

}  // namespace

std::string_view threshold_method_name(ThresholdMethod method) {
  switch (method) {
    case ThresholdMethod::StandardCP: return "StandardCP";
    case ThresholdMethod::NoisyCP: return "NoisyCP";
    case ThresholdMethod::NACP_Uniform: return "NACP_Uniform";
    case ThresholdMethod::NACP_General: return "NACP_General";
  }
  return "Unknown";
}

std::string_view breakpoint_mode_name(BreakpointMode mode) {
  return mode == BreakpointMode::Exact ? "exact" : "grid";
}

std::size_t quantile_rank(std::size_t n, double level) {
  if (n == 0) throw Error(Errc::EmptyScoreList, "no scores");
  const auto dn = static_cast<double>(n);
  if (!(level > 0.0)) return 1;
  if (level >= 1.0) return n;
  auto reaches = [&](std::size_t r) { return static_cast<double>(r) / dn >= level; };
  auto r = static_cast<std::size_t>(std::clamp(std::ceil(dn * level), 1.0, dn));
  while (r > 1 && reaches(r - 1)) --r;
  while (r < n && !reaches(r)) ++r;
  return r;
}

double empirical_quantile(std::span<const double> scores, double level) {
  if (scores.empty()) throw Error(Errc::EmptyScoreList, "no scores");
  std::vector<double> copy(scores.begin(), scores.end());
  const std::size_t r = quantile_rank(copy.size(), level);
  std::nth_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(r - 1), copy.end());
  return copy[r - 1];
}

ThresholdResult standard_cp(std::span<const double> scores, double alpha, ThresholdMethod method) {
  if (scores.empty()) throw Error(Errc::EmptyScoreList, "no calibration scores");
  require_alpha(alpha);
  const double level = 1.0 - alpha;
  ThresholdResult out;
  out.method = method;
  out.target_level = level;
  out.q = empirical_quantile(scores, level);
  out.q1 = out.q;
  out.q2 = out.q;
  const auto covered = std::count_if(scores.begin(), scores.end(), [&](double s) { return s <= out.q; });
  out.achieved_fc = static_cast<double>(covered) / static_cast<double>(scores.size());
  out.breakpoint_count = scores.size();
  return out;
}

SearchBracket search_bracket(std::span<const double> noisy_scores, double target_level,
                             double epsilon, std::size_t k) {
  if (noisy_scores.empty()) throw Error(Errc::EmptyScoreList, "no calibration scores");
  validate_epsilon(epsilon);
  if (k < 2) throw Error(Errc::TooFewClasses, "need k >= 2");
  SearchBracket b;
  b.level1 = target_level * (1.0 - epsilon) / (1.0 - epsilon / static_cast<double>(k));
  b.level2 = target_level + (1.0 - target_level) * epsilon;

  std::vector<double> sorted(noisy_scores.begin(), noisy_scores.end());
  std::sort(sorted.begin(), sorted.end());
  b.q1 = sorted[quantile_rank(sorted.size(), b.level1) - 1];
  b.q2 = sorted[quantile_rank(sorted.size(), b.level2) - 1];
  return b;
}

std::pair<double, double> search_bounds(std::span<const double> noisy_scores, double alpha,
                                        double epsilon, std::size_t k) {
  require_alpha(alpha);
  const SearchBracket b = search_bracket(noisy_scores, 1.0 - alpha, epsilon, k);
  return {b.q1, b.q2};
}

std::vector<double> candidate_breakpoints(const ScoreTable& scores, const CurveOptions& options,
                                          BreakpointMode* mode) {
  const auto& values = scores.values();
  if (values.empty()) throw Error(Errc::EmptyScoreList, "score table is empty");
  if (values.size() <= options.grid_budget) {
    std::vector<double> bps(values);
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    if (mode) *mode = BreakpointMode::Exact;
    return bps;
  }
  if (options.grid_resolution < 2) throw Error(Errc::InvalidConfig, "grid resolution must be >= 2");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> bps;
  bps.reserve(options.grid_resolution);
  const auto steps = static_cast<double>(options.grid_resolution - 1);
  for (std::size_t i = 0; i + 1 < options.grid_resolution; ++i) {
    bps.push_back(lo + (hi - lo) * (static_cast<double>(i) / steps));
  }
  bps.push_back(hi);
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
  if (mode) *mode = BreakpointMode::Grid;
  return bps;
}

CalibrationCurve build_curve(const ScoreTable& scores, std::span<const int> noisy_labels,
                             double epsilon, std::vector<double> breakpoints) {
  validate_epsilon(epsilon);
  CalibrationCurve curve = count_curve(scores, noisy_labels, std::move(breakpoints));
  for (std::size_t j = 0; j < curve.size(); ++j) {
    curve.fc_hat[j] = (curve.fn_hat[j] - epsilon * curve.fr_hat[j]) / (1.0 - epsilon);
  }
  return curve;
}

CalibrationCurve build_curve(const LabeledSet& calib, double epsilon, const ScoreParams& params,
                             std::vector<double> breakpoints) {
  return build_curve(ScoreTable::compute(calib.probs, params), calib.labels, epsilon,
                     std::move(breakpoints));
}

CalibrationCurve build_curve_general(const ScoreTable& scores, std::span<const int> noisy_labels,
                                     const InvertedNoise& inverse, std::vector<double> breakpoints) {
  const Matrix& inv = inverse.p_inverse;
  if (inv.rows() != scores.classes() || !inv.square()) {
    throw Error(Errc::InvalidArgument, "inverse noise matrix does not match the class count");
  }
  CalibrationCurve curve = count_curve(scores, noisy_labels, std::move(breakpoints));
  const std::size_t m = curve.size();
  const std::size_t k = scores.classes();

  std::vector<CompensatedSum> bins(m + 1);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto noisy = static_cast<std::size_t>(noisy_labels[i]);
    for (std::size_t cls = 0; cls < k; ++cls) {
      bins[bin_of(curve.breakpoints, scores(i, cls))].add(inv(noisy, cls));
    }
  }
  CompensatedSum running;
  const auto dn = static_cast<double>(scores.rows());
  for (std::size_t j = 0; j < m; ++j) {
    running.add(bins[j].sum);
    running.add(bins[j].carry);
    curve.fc_hat[j] = running.value() / dn;
  }
  return curve;
}

ThresholdResult search_curve(const CalibrationCurve& curve, double target_level, double lower,
                             double upper, bool largest_solution) {
  const std::size_t m = curve.size();
  if (m == 0) throw Error(Errc::InvalidArgument, "empty calibration curve");
  const auto& bps = curve.breakpoints;
  std::size_t start = bin_of(bps, lower);
  if (start == m) start = m - 1;

  std::size_t chosen = m;
  if (largest_solution) {
    if (curve.fc_hat[m - 1] >= target_level) {
      chosen = m - 1;
      while (chosen > start && curve.fc_hat[chosen - 1] >= target_level) --chosen;
    }
  } else {
    for (std::size_t j = start; j < m; ++j) {
      if (curve.fc_hat[j] >= target_level) {
        chosen = j;
        break;
      }
    }
  }
  if (chosen == m) {
    throw Error(Errc::TargetLevelUnreachable,
                "estimated coverage " + std::to_string(curve.fc_hat[m - 1]) +
                    " at the largest threshold is below the target " +
                    std::to_string(target_level));
  }

  ThresholdResult out;
  out.q = bps[chosen];
  out.q1 = lower;
  out.q2 = upper;
  out.achieved_fc = curve.fc_hat[chosen];
  out.target_level = target_level;
  out.extended_search = out.q > upper;
  out.breakpoint_count = m;
  out.breakpoint_mode = curve.mode;
  return out;
}

ThresholdResult nacp_uniform(const ScoreTable& scores, std::span<const int> noisy_labels,
                             double epsilon, double target_level, const SearchOptions& options) {
  validate_epsilon(epsilon);
  require_target(target_level);
  const std::vector<double> noisy = scores.label_scores(noisy_labels);
  const SearchBracket bracket = search_bracket(noisy, target_level, epsilon, scores.classes());

  BreakpointMode mode = BreakpointMode::Exact;
  std::vector<double> bps = candidate_breakpoints(scores, options.curve, &mode);
  CalibrationCurve curve = build_curve(scores, noisy_labels, epsilon, std::move(bps));
  curve.mode = mode;

  ThresholdResult out =
      search_curve(curve, target_level, bracket.q1, bracket.q2, options.largest_solution);
  out.method = ThresholdMethod::NACP_Uniform;
  return out;
}

ThresholdResult nacp_uniform(const LabeledSet& calib, double epsilon, double alpha,
                             const ScoreParams& params, const SearchOptions& options) {
  require_alpha(alpha);
  return nacp_uniform(ScoreTable::compute(calib.probs, params), calib.labels, epsilon, 1.0 - alpha,
                      options);
}

ThresholdResult nacp_general(const ScoreTable& scores, std::span<const int> noisy_labels,
                             const InvertedNoise& inverse, double target_level,
                             const SearchOptions& options) {
  require_target(target_level);
  BreakpointMode mode = BreakpointMode::Exact;
  std::vector<double> bps = candidate_breakpoints(scores, options.curve, &mode);
  CalibrationCurve curve = build_curve_general(scores, noisy_labels, inverse, std::move(bps));
  curve.mode = mode;

  ThresholdResult out = search_curve(curve, target_level, curve.breakpoints.front(),
                                     curve.breakpoints.back(), options.largest_solution);
  out.method = ThresholdMethod::NACP_General;
  return out;
}

ThresholdResult nacp_general(const LabeledSet& calib, const Matrix& p, double alpha,
                             const ScoreParams& params, const SearchOptions& options) {
  require_alpha(alpha);
  validate_noise_model(GeneralNoise{p});
  if (p.rows() != calib.classes()) {
    throw Error(Errc::InvalidArgument, "noise matrix does not match the class count");
  }
  return nacp_general(ScoreTable::compute(calib.probs, params), calib.labels,
                      invert_noise_matrix(p), 1.0 - alpha, options);
}

double random_label_coverage(const ScoreTable& scores, double q) {
  const auto& v = scores.values();
  if (v.empty()) throw Error(Errc::EmptyScoreList, "score table is empty");
  const auto inside = std::count_if(v.begin(), v.end(), [&](double s) { return s <= q; });
  return static_cast<double>(inside) / static_cast<double>(v.size());
}

}  // namespace noisycp
