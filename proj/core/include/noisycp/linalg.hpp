#pragma once

#include <optional>

#include "noisycp/types.hpp"

namespace noisycp {

struct InvertedNoise {
  Matrix p_inverse;
  /// ||P||_1 * ||P^-1||_1.
  double condition_estimate = 1.0;
  /// condition_estimate above kIllConditioned. A warning, not a failure.
  bool ill_conditioned = false;
  /// Set when P matched the uniform-noise pattern and the closed form was used.
  std::optional<double> uniform_epsilon;
};

inline constexpr double kSingularPivot = 1e-12;
inline constexpr double kIllConditioned = 1e10;

/// If p is (numerically) the uniform noise matrix for some eps, returns eps.
std::optional<double> detect_uniform_noise(const Matrix& p, double tol = 1e-12);

/// Closed form (1/(1-eps)) I - eps/((1-eps) k) 11^T.
Matrix uniform_noise_inverse(double epsilon, std::size_t k);

/// Inverts a square matrix by LU decomposition with partial pivoting.
/// Throws SingularMatrix when a pivot falls below kSingularPivot.
Matrix lu_inverse(const Matrix& a);

/// Inverse of a forward noise matrix. Uniform matrices take the closed form,
/// everything else goes through lu_inverse.
InvertedNoise invert_noise_matrix(const Matrix& p);

}  // namespace noisycp
