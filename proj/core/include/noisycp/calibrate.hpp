#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "noisycp/linalg.hpp"
#include "noisycp/scores.hpp"
#include "noisycp/types.hpp"

namespace noisycp {

enum class ThresholdMethod { StandardCP, NoisyCP, NACP_Uniform, NACP_General };
enum class BreakpointMode { Exact, Grid };

std::string_view threshold_method_name(ThresholdMethod method);
std::string_view breakpoint_mode_name(BreakpointMode mode);

struct ThresholdResult {
  double q = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  /// Estimated clean coverage at q (empirical CDF for standard CP).
  double achieved_fc = 0.0;
  double target_level = 0.0;
  ThresholdMethod method = ThresholdMethod::StandardCP;
  /// No breakpoint inside [q1, q2] reached the level; q lies above q2.
  bool extended_search = false;
  std::size_t breakpoint_count = 0;
  BreakpointMode breakpoint_mode = BreakpointMode::Exact;
};

/// Empirical F-hat estimates on a sorted set of candidate thresholds.
struct CalibrationCurve {
  std::vector<double> breakpoints;
  std::vector<double> fn_hat;  // noisy-label coverage
  std::vector<double> fr_hat;  // random-label coverage, mean |C_q| / k
  std::vector<double> fc_hat;  // inferred clean-label coverage
  std::size_t samples = 0;
  std::size_t classes = 0;
  BreakpointMode mode = BreakpointMode::Exact;

  std::size_t size() const noexcept { return breakpoints.size(); }
};

struct CurveOptions {
  /// Above this many class scores (n * k) a uniform grid replaces the exact
  /// breakpoint set.
  std::size_t grid_budget = 10'000'000;
  std::size_t grid_resolution = 10'000;
};

struct SearchOptions {
  CurveOptions curve;
  /// Take the start of the final run of breakpoints with fc_hat >= level
  /// instead of the first crossing.
  bool largest_solution = false;
};

/// 1-based rank r of the empirical `level` quantile: the smallest r in [1, n]
/// with r / n >= level (evaluated in double, the same way curves compute
/// F-hat), so quantiles and curve crossings agree exactly.
std::size_t quantile_rank(std::size_t n, double level);

/// r-th order statistic with r = quantile_rank(n, level).
double empirical_quantile(std::span<const double> scores, double level);

/// Standard split CP threshold at level 1 - alpha. Tag the result NoisyCP when
/// the scores come from noisy labels.
ThresholdResult standard_cp(std::span<const double> scores, double alpha,
                            ThresholdMethod method = ThresholdMethod::StandardCP);

struct SearchBracket {
  double q1 = 0.0;
  double q2 = 0.0;
  double level1 = 0.0;
  double level2 = 0.0;
};

/// Quantiles of the noisy scores at target*(1-eps)/(1-eps/k) and
/// target + (1-target)*eps; any q with fc_hat(q) = target lies between them.
SearchBracket search_bracket(std::span<const double> noisy_scores, double target_level,
                             double epsilon, std::size_t k);

/// search_bracket for target 1 - alpha, returning (q1, q2).
std::pair<double, double> search_bounds(std::span<const double> noisy_scores, double alpha,
                                        double epsilon, std::size_t k);

/// All distinct class scores, or a uniform grid over [min, max] when the
/// table exceeds the budget.
std::vector<double> candidate_breakpoints(const ScoreTable& scores, const CurveOptions& options,
                                          BreakpointMode* mode = nullptr);

/// fn/fr/fc under uniform noise on the given ascending breakpoints.
CalibrationCurve build_curve(const ScoreTable& scores, std::span<const int> noisy_labels,
                             double epsilon, std::vector<double> breakpoints);
CalibrationCurve build_curve(const LabeledSet& calib, double epsilon, const ScoreParams& params,
                             std::vector<double> breakpoints);

/// fn/fr plus fc = Tr(M_q P^-1), accumulated per (sample, class) as
/// P^-1(noisy label, class) without forming M_q.
CalibrationCurve build_curve_general(const ScoreTable& scores, std::span<const int> noisy_labels,
                                     const InvertedNoise& inverse, std::vector<double> breakpoints);

/// Searches a built curve for the threshold. Only breakpoints >= lower are
/// candidates; the first crossing <= upper is preferred, otherwise the search
/// continues above upper and flags the result.
ThresholdResult search_curve(const CalibrationCurve& curve, double target_level, double lower,
                             double upper, bool largest_solution);

/// Noise-aware threshold for uniform label noise. target_level is 1 - alpha,
/// optionally raised by a finite-sample correction; it must be < 1.
ThresholdResult nacp_uniform(const ScoreTable& scores, std::span<const int> noisy_labels,
                             double epsilon, double target_level, const SearchOptions& options = {});
ThresholdResult nacp_uniform(const LabeledSet& calib, double epsilon, double alpha,
                             const ScoreParams& params, const SearchOptions& options = {});

/// Noise-aware threshold for a general forward transition matrix.
ThresholdResult nacp_general(const ScoreTable& scores, std::span<const int> noisy_labels,
                             const InvertedNoise& inverse, double target_level,
                             const SearchOptions& options = {});
ThresholdResult nacp_general(const LabeledSet& calib, const Matrix& p, double alpha,
                             const ScoreParams& params, const SearchOptions& options = {});

/// fr_hat(q) evaluated directly: the mean prediction-set size over k.
double random_label_coverage(const ScoreTable& scores, double q);

}  // namespace noisycp
