#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "noisycp/types.hpp"

namespace noisycp {

enum class ScoreKind { HPS, APS, RAPS };

std::string_view score_kind_name(ScoreKind kind);
ScoreKind parse_score_kind(std::string_view name);

struct ScoreParams {
  ScoreKind kind = ScoreKind::APS;
  double raps_a = 0.1;  // RAPS only
  int raps_b = 1;       // RAPS only
  bool randomized = false;  // APS only
  std::uint64_t seed = 0;

  /// Rejects negative RAPS parameters and randomized HPS/RAPS, which have no
  /// agreed-upon definition.
  void validate() const;
};

/// Conformity scores of every class for one sample.
using ScoreVector = std::vector<double>;

/// Score of `label` for one probability row. `sample_index` keys the uniform
/// draw of randomized APS; deterministic kinds ignore it. Always equal to
/// score_all(row, params, sample_index)[label].
double score(std::span<const double> row, int label, const ScoreParams& params,
             std::size_t sample_index = 0);

ScoreVector score_all(std::span<const double> row, const ScoreParams& params,
                      std::size_t sample_index = 0);

/// Classes whose score is <= q, ascending. May be empty.
std::vector<int> prediction_set(std::span<const double> row, double q, const ScoreParams& params,
                                std::size_t sample_index = 0);

/// Per-class scores of a whole probability matrix (n x k, row-major), so the
/// calibration and evaluation code scores each sample once.
class ScoreTable {
 public:
  ScoreTable() = default;
  ScoreTable(std::size_t rows, std::size_t classes, std::vector<double> values);

  /// Row i is scored with sample index `first_index + i`.
  static ScoreTable compute(const ProbabilityMatrix& probs, const ScoreParams& params,
                            std::size_t first_index = 0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t classes() const noexcept { return classes_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * classes_ + j]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * classes_, classes_}; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Scores of the given labels, one per row.
  std::vector<double> label_scores(std::span<const int> labels) const;
  ScoreTable select_rows(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> values_;
};

}  // namespace noisycp
