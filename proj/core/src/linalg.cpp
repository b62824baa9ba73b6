#include "noisycp/linalg.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "noisycp/error.hpp"

namespace noisycp {

std::optional<double> detect_uniform_noise(const Matrix& p, double tol) {
  if (!p.square() || p.rows() < 2) return std::nullopt;
  const std::size_t k = p.rows();
  const double off = p(0, 1);
  const double diag = p(0, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double expected = (i == j) ? diag : off;
      if (std::abs(p(i, j) - expected) > tol) return std::nullopt;
    }
  }
  const double epsilon = off * static_cast<double>(k);
  if (!(epsilon >= 0.0 && epsilon < 1.0)) return std::nullopt;
  if (std::abs(diag - (1.0 - epsilon + off)) > tol) return std::nullopt;
  return epsilon;
}

Matrix uniform_noise_inverse(double epsilon, std::size_t k) {
  const double scale = 1.0 / (1.0 - epsilon);
  const double off = -epsilon / ((1.0 - epsilon) * static_cast<double>(k));
  Matrix inv(k, k, off);
  for (std::size_t i = 0; i < k; ++i) inv(i, i) = scale + off;
  return inv;
}

Matrix lu_inverse(const Matrix& a) {
  if (!a.square()) throw Error(Errc::InvalidArgument, "cannot invert a non-square matrix");
  const std::size_t n = a.rows();
  Matrix lu = a;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(lu(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(lu(r, col)) > best) {
        best = std::abs(lu(r, col));
        pivot = r;
      }
    }
    if (best < kSingularPivot) {
      throw Error(Errc::SingularMatrix,
                  "pivot " + std::to_string(best) + " in column " + std::to_string(col));
    }
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(col, j), lu(pivot, j));
      std::swap(perm[col], perm[pivot]);
    }
    const double diag = lu(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = lu(r, col) / diag;
      lu(r, col) = factor;
      if (factor == 0.0) continue;
      for (std::size_t j = col + 1; j < n; ++j) lu(r, j) -= factor * lu(col, j);
    }
  }

  // Solve L U x = e_perm for every unit vector; columns of the inverse.
  Matrix inv(n, n);
  std::vector<double> x(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < n; ++i) x[i] = (perm[i] == c) ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];
      for (std::size_t j = 0; j < i; ++j) s -= lu(i, j) * x[j];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= lu(i, j) * x[j];
      x[i] = s / lu(i, i);
    }
    for (std::size_t i = 0; i < n; ++i) inv(i, c) = x[i];
  }
  return inv;
}

InvertedNoise invert_noise_matrix(const Matrix& p) {
  if (!p.square()) throw Error(Errc::InvalidArgument, "noise matrix must be square");
  InvertedNoise out;
  if (auto eps = detect_uniform_noise(p)) {
    out.p_inverse = uniform_noise_inverse(*eps, p.rows());
    out.uniform_epsilon = eps;
  } else {
    out.p_inverse = lu_inverse(p);
  }
  out.condition_estimate = p.norm1() * out.p_inverse.norm1();
  out.ill_conditioned = out.condition_estimate > kIllConditioned;
  return out;
}

}  // namespace noisycp
