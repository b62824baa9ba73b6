#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "noisycp/calibrate.hpp"
#include "noisycp/scores.hpp"
#include "noisycp/types.hpp"

namespace noisycp {

enum class EvalMethod { Oracle, NoisyCP, NRCP_noDelta, NACP, ACNL_adjusted, CRCP_adjusted };

std::string_view eval_method_name(EvalMethod method);
EvalMethod parse_eval_method(std::string_view name);
std::vector<EvalMethod> all_eval_methods();

struct ExperimentConfig {
  std::vector<EvalMethod> methods = all_eval_methods();
  ScoreParams score;
  double alpha = 0.1;
  double delta_conf = 0.001;
  NoiseModel noise = UniformNoise{0.2};
  /// Clean-label prior for the ACNL/CRCP corrections; empty = uniform.
  std::vector<double> class_prior;
  double split_fraction = 0.5;
  std::size_t n_splits = 1000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t acnl_mc_samples = 10'000;
  SearchOptions search;
  bool keep_split_records = false;

  void validate() const;
};

/// Pooled calibration+test data with both label versions.
struct NoisyPool {
  ProbabilityMatrix probs;
  std::vector<int> clean_labels;
  std::vector<int> noisy_labels;

  static NoisyPool validate(ProbabilityMatrix probs, std::vector<int> clean, std::vector<int> noisy);
  std::size_t size() const noexcept { return clean_labels.size(); }
};

struct CoverageSize {
  double coverage = 0.0;
  double avg_size = 0.0;
};

/// Mean of 1{y_i in C(x_i)} and of |C(x_i)| over the test rows.
CoverageSize coverage_and_size(const LabeledSet& test, double q, const ScoreParams& params);
CoverageSize coverage_and_size(const ScoreTable& scores, std::span<const int> labels, double q);

struct SplitRecord {
  std::size_t split = 0;
  EvalMethod method = EvalMethod::Oracle;
  double q = 0.0;
  double delta = 0.0;
  double coverage = 0.0;
  double size = 0.0;
  double noisy_coverage = 0.0;
  bool trivial_set = false;
  bool failed = false;
};

struct MethodSummary {
  EvalMethod method = EvalMethod::Oracle;
  std::size_t completed = 0;
  std::size_t failures = 0;
  double mean_coverage = 0.0;
  double std_coverage = 0.0;
  double mean_size = 0.0;
  double std_size = 0.0;
  double mean_noisy_coverage = 0.0;
  double mean_q = 0.0;
  double mean_delta = 0.0;
  double trivial_rate = 0.0;
};

struct TrialReport {
  std::size_t n_splits = 0;
  std::size_t n_calibration = 0;
  std::size_t n_test = 0;
  std::size_t k = 0;
  double alpha = 0.0;
  std::vector<MethodSummary> methods;
  /// Per-split check: (q_NRCP <= q_NoisyCP) iff fr_hat(q_NoisyCP) <= 1 - alpha.
  std::size_t order_checks = 0;
  std::size_t order_violations = 0;
  /// Per-split check: NACP coverage with the correction >= without it.
  std::size_t delta_checks = 0;
  std::size_t delta_violations = 0;
  std::vector<SplitRecord> records;

  const MethodSummary* find(EvalMethod method) const;
};

/// Repeated random splits: calibrate every method on the calibration part
/// (noisy labels, clean for Oracle), evaluate on the rest against clean
/// labels. Deterministic given the seed regardless of thread count.
TrialReport run_experiment(const NoisyPool& pool, const ExperimentConfig& config);

void write_report_table(std::ostream& out, const TrialReport& report);
void write_split_csv(std::ostream& out, const TrialReport& report);

}  // namespace noisycp
