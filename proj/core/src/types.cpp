#include "noisycp/types.hpp"

#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "noisycp/error.hpp"
#include "noisycp/parallel.hpp"

namespace noisycp {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(Errc::InvalidArgument, "matrix data size does not match its shape");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
  if (cols_ != rhs.rows_) throw Error(Errc::InvalidArgument, "matrix shapes do not conform");
  Matrix out(rows_, rhs.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t l = 0; l < cols_; ++l) {
      const double a = (*this)(i, l);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += a * rhs(l, j);
    }
  }
  return out;
}

Matrix Matrix::transpose() const {
  Matrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

double Matrix::norm1() const {
  double best = 0.0;
  for (std::size_t j = 0; j < cols_; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) col += std::abs((*this)(i, j));
    best = std::max(best, col);
  }
  return best;
}

double Matrix::max_abs_diff(const Matrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw Error(Errc::InvalidArgument, "matrix shapes differ");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    worst = std::max(worst, std::abs(data_[i] - other.data_[i]));
  }
  return worst;
}

ProbabilityMatrix ProbabilityMatrix::validate(std::size_t rows, std::size_t cols,
                                              std::vector<double> values) {
  if (cols < 2) throw Error(Errc::TooFewClasses, "need at least 2 classes, got " + std::to_string(cols));
  if (rows < 1) throw Error(Errc::InvalidArgument, "probability matrix has no rows");
  if (values.size() != rows * cols) {
    throw Error(Errc::InvalidArgument, "probability buffer is not rectangular");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = values.data() + i * cols;
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (!std::isfinite(row[j])) {
        throw Error(Errc::InvalidArgument, "non-finite probability in row " + std::to_string(i));
      }
      if (row[j] < 0.0) {
        throw Error(Errc::NegativeEntry, "negative probability in row " + std::to_string(i));
      }
      sum += row[j];
    }
    const double off = std::abs(sum - 1.0);
    if (off > kRowSumTolerance) {
      throw Error(Errc::RowSumOutOfTolerance,
                  "row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
    if (off > 1e-12) {
      for (std::size_t j = 0; j < cols; ++j) row[j] /= sum;
    }
  }
  return ProbabilityMatrix(rows, cols, std::move(values));
}

ProbabilityMatrix ProbabilityMatrix::validate(const std::vector<std::vector<double>>& raw) {
  if (raw.empty()) throw Error(Errc::InvalidArgument, "probability matrix has no rows");
  const std::size_t cols = raw.front().size();
  std::vector<double> flat;
  flat.reserve(raw.size() * cols);
  for (const auto& r : raw) {
    if (r.size() != cols) throw Error(Errc::InvalidArgument, "ragged probability rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return validate(raw.size(), cols, std::move(flat));
}

ProbabilityMatrix ProbabilityMatrix::select_rows(std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * cols_);
  for (std::size_t idx : indices) {
    auto r = row(idx);
    out.insert(out.end(), r.begin(), r.end());
  }
  return ProbabilityMatrix(indices.size(), cols_, std::move(out));
}

void validate_labels(std::span<const int> labels, std::size_t k) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw Error(Errc::LabelOutOfRange, "label " + std::to_string(labels[i]) + " at row " +
                                             std::to_string(i) + " outside [0, " +
                                             std::to_string(k) + ")");
    }
  }
}

LabeledSet LabeledSet::validate(ProbabilityMatrix probs, std::vector<int> labels) {
  if (labels.size() != probs.rows()) {
    throw Error(Errc::InvalidArgument, "label count " + std::to_string(labels.size()) +
                                           " does not match row count " +
                                           std::to_string(probs.rows()));
  }
  validate_labels(labels, probs.classes());
  return LabeledSet{std::move(probs), std::move(labels)};
}

CoverageSpec CoverageSpec::validate(double alpha, double delta) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0,1)");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::InvalidArgument, "delta must lie in (0,1)");
  return CoverageSpec{alpha, delta};
}

void validate_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw Error(Errc::EpsilonOutOfRange, "epsilon must lie in [0,1), got " + std::to_string(epsilon));
  }
}

void validate_noise_model(const NoiseModel& noise) {
  if (const auto* u = std::get_if<UniformNoise>(&noise)) {
    validate_epsilon(u->epsilon);
    return;
  }
  const Matrix& p = std::get<GeneralNoise>(noise).p;
  if (!p.square() || p.rows() < 2) {
    throw Error(Errc::InvalidArgument, "noise matrix must be square with k >= 2");
  }
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double sum = 0.0;
    for (double v : p.row(i)) {
      if (!std::isfinite(v) || v < 0.0) {
        throw Error(Errc::NegativeEntry, "noise matrix row " + std::to_string(i) +
                                             " has a negative or non-finite entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-8) {
      throw Error(Errc::RowSumOutOfTolerance,
                  "noise matrix row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
}

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

GeneralNoise uniform_noise_as_matrix(double epsilon, std::size_t k) {
  validate_epsilon(epsilon);
  if (k < 2) throw Error(Errc::TooFewClasses, "uniform noise needs k >= 2");
  const double off = epsilon / static_cast<double>(k);
  Matrix p(k, k, off);
  for (std::size_t i = 0; i < k; ++i) {
    p(i, i) = 1.0 - epsilon + off;
    // Nudge the diagonal until the compensated row sum is exactly one.
    for (int attempt = 0; attempt < 16; ++attempt) {
      const double sum = compensated_sum(p.row(i));
      if (sum == 1.0) break;
      p(i, i) = std::nextafter(p(i, i), sum < 1.0 ? 2.0 : 0.0);
    }
  }
  return GeneralNoise{std::move(p)};
}

Matrix noise_matrix(const NoiseModel& noise, std::size_t k) {
  if (const auto* u = std::get_if<UniformNoise>(&noise)) {
    return uniform_noise_as_matrix(u->epsilon, k).p;
  }
  const Matrix& p = std::get<GeneralNoise>(noise).p;
  if (p.rows() != k) {
    throw Error(Errc::InvalidArgument, "noise matrix is " + std::to_string(p.rows()) + "x" +
                                           std::to_string(p.cols()) + " but data has " +
                                           std::to_string(k) + " classes");
  }
  return p;
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("NOISYCP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace noisycp
