#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace noisycp {

/// Dense row-major matrix of doubles. Used for noise transition matrices and
/// their inverses, which stay small (k x k).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const noexcept { return data_; }

  Matrix operator*(const Matrix& rhs) const;
  Matrix transpose() const;

  /// Induced 1-norm (max absolute column sum).
  double norm1() const;
  double max_abs_diff(const Matrix& other) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// n x k classifier outputs. Every entry lies in [0,1], every row sums to 1
/// within 1e-6 and k >= 2. Immutable once validated.
class ProbabilityMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-6;

  /// Validates a row-major buffer. Rows off by more than 1e-12 (but within
  /// kRowSumTolerance) are rescaled to sum to one; all other rows are kept
  /// bit-for-bit, so validating twice is a no-op.
  static ProbabilityMatrix validate(std::size_t rows, std::size_t cols, std::vector<double> values);
  static ProbabilityMatrix validate(const std::vector<std::vector<double>>& raw);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t classes() const noexcept { return cols_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  const std::vector<double>& values() const noexcept { return values_; }

  ProbabilityMatrix select_rows(std::span<const std::size_t> indices) const;

  bool operator==(const ProbabilityMatrix&) const = default;

 private:
  ProbabilityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {}

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Probability rows paired with one class label per row (0-based).
struct LabeledSet {
  ProbabilityMatrix probs;
  std::vector<int> labels;

  static LabeledSet validate(ProbabilityMatrix probs, std::vector<int> labels);

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t classes() const noexcept { return probs.classes(); }
};

void validate_labels(std::span<const int> labels, std::size_t k);

struct CoverageSpec {
  double alpha = 0.1;
  double delta = 0.001;

  static CoverageSpec validate(double alpha, double delta);

  double target_level() const { return 1.0 - alpha; }
};

struct UniformNoise {
  double epsilon = 0.0;
};

/// Forward transition matrix: p(i, j) = p(noisy = j | clean = i).
struct GeneralNoise {
  Matrix p;
};

using NoiseModel = std::variant<UniformNoise, GeneralNoise>;

void validate_epsilon(double epsilon);

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);

/// Checks 0 <= eps < 1 or a square row-stochastic non-negative matrix.
/// Invertibility is checked where the inverse is needed.
void validate_noise_model(const NoiseModel& noise);

/// k x k matrix with 1 - eps + eps/k on the diagonal and eps/k elsewhere.
/// The diagonal absorbs the rounding residual so each row's compensated sum
/// is exactly one and the matrix stays exactly symmetric.
GeneralNoise uniform_noise_as_matrix(double epsilon, std::size_t k);

/// Forward matrix for any noise model; uniform needs the class count.
Matrix noise_matrix(const NoiseModel& noise, std::size_t k);

}  // namespace noisycp
