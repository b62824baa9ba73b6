#include "noisycp/scores.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <string>

#include "noisycp/error.hpp"
#include "noisycp/random.hpp"

namespace noisycp {
namespace {

// Fills `out` with the scores of every class. APS/RAPS walk the classes in
// descending probability; tied classes share one cumulative sum, so
// {i | p_i >= p_y} includes every class tied with y.
void fill_scores(std::span<const double> row, const ScoreParams& params, std::size_t sample_index,
                 std::span<double> out) {
  const std::size_t k = row.size();
  if (params.kind == ScoreKind::HPS) {
    for (std::size_t j = 0; j < k; ++j) out[j] = 1.0 - row[j];
    return;
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });

  double cumulative = 0.0;
  std::size_t start = 0;
  while (start < k) {
    std::size_t end = start + 1;
    while (end < k && row[order[end]] == row[order[start]]) ++end;
    const double strictly_above = cumulative;
    for (std::size_t t = start; t < end; ++t) cumulative += row[order[t]];
    const auto at_or_above = static_cast<double>(end);

    for (std::size_t t = start; t < end; ++t) {
      const std::size_t cls = order[t];
      double s = 0.0;
      if (params.randomized) {
        CounterStream u(params.seed, StreamDomain::RandomizedScore, sample_index, cls);
        s = strictly_above + u.uniform() * row[cls];
      } else {
        s = cumulative;
      }
      if (params.kind == ScoreKind::RAPS) {
        s += params.raps_a * std::max(0.0, at_or_above - static_cast<double>(params.raps_b));
      }
      out[cls] = s;
    }
    start = end;
  }
}

}  // namespace

std::string_view score_kind_name(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::HPS: return "hps";
    case ScoreKind::APS: return "aps";
    case ScoreKind::RAPS: return "raps";
  }
  return "unknown";
}

ScoreKind parse_score_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "hps") return ScoreKind::HPS;
  if (lower == "aps") return ScoreKind::APS;
  if (lower == "raps") return ScoreKind::RAPS;
  throw Error(Errc::InvalidArgument, "unknown score kind '" + std::string(name) + "'");
}

void ScoreParams::validate() const {
  if (randomized && kind != ScoreKind::APS) {
    throw Error(Errc::UnsupportedScore, "randomized scores are defined for APS only");
  }
  if (kind == ScoreKind::RAPS) {
    if (!(raps_a >= 0.0)) throw Error(Errc::InvalidArgument, "raps_a must be >= 0");
    if (raps_b < 0) throw Error(Errc::InvalidArgument, "raps_b must be >= 0");
  }
}

double score(std::span<const double> row, int label, const ScoreParams& params,
             std::size_t sample_index) {
  if (label < 0 || static_cast<std::size_t>(label) >= row.size()) {
    throw Error(Errc::LabelOutOfRange, "label " + std::to_string(label) + " outside [0, " +
                                           std::to_string(row.size()) + ")");
  }
  params.validate();
  if (params.kind == ScoreKind::HPS) return 1.0 - row[static_cast<std::size_t>(label)];
  return score_all(row, params, sample_index)[static_cast<std::size_t>(label)];
}

ScoreVector score_all(std::span<const double> row, const ScoreParams& params,
                      std::size_t sample_index) {
  params.validate();
  ScoreVector out(row.size());
  fill_scores(row, params, sample_index, out);
  return out;
}

std::vector<int> prediction_set(std::span<const double> row, double q, const ScoreParams& params,
                                std::size_t sample_index) {
  const ScoreVector s = score_all(row, params, sample_index);
  std::vector<int> members;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] <= q) members.push_back(static_cast<int>(j));
  }
  return members;
}

ScoreTable::ScoreTable(std::size_t rows, std::size_t classes, std::vector<double> values)
    : rows_(rows), classes_(classes), values_(std::move(values)) {
  if (values_.size() != rows_ * classes_) {
    throw Error(Errc::InvalidArgument, "score table size does not match its shape");
  }
}

ScoreTable ScoreTable::compute(const ProbabilityMatrix& probs, const ScoreParams& params,
                               std::size_t first_index) {
  params.validate();
  const std::size_t n = probs.rows();
  const std::size_t k = probs.classes();
  std::vector<double> values(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    fill_scores(probs.row(i), params, first_index + i, {values.data() + i * k, k});
  }
  return ScoreTable(n, k, std::move(values));
}

std::vector<double> ScoreTable::label_scores(std::span<const int> labels) const {
  if (labels.size() != rows_) {
    throw Error(Errc::InvalidArgument, "label count does not match score table rows");
  }
  validate_labels(labels, classes_);
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, static_cast<std::size_t>(labels[i]));
  return out;
}

ScoreTable ScoreTable::select_rows(std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * classes_);
  for (std::size_t idx : indices) {
    auto r = row(idx);
    out.insert(out.end(), r.begin(), r.end());
  }
  return ScoreTable(indices.size(), classes_, std::move(out));
}

}  // namespace noisycp
