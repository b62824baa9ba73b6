#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "noisycp/types.hpp"

namespace noisycp {

enum class CorrectionMethod { NACP, ACNL, CRCP };

std::string_view correction_method_name(CorrectionMethod method);
CorrectionMethod parse_correction_method(std::string_view name);

/// A finite-sample correction term and the inputs that produced it. Fields
/// that do not apply to a method stay at their defaults.
struct CorrectionTerm {
  CorrectionMethod method = CorrectionMethod::NACP;
  double delta_value = 0.0;
  std::size_t n = 0;
  std::size_t k = 0;
  double epsilon = 0.0;

  // NACP
  double delta_conf = 0.0;
  double h = 1.0;

  // ACNL
  std::size_t mc_samples = 0;
  double c_n = 0.0;
  double c_n_stderr = 0.0;
  std::size_t n_star = 0;
  /// n_star came from floor(n * min rho_tilde) rather than observed counts.
  bool expected_counts = false;
};

/// Clean (rho) and noisy (rho_tilde) label marginals.
struct ClassMarginals {
  std::vector<double> rho;
  std::vector<double> rho_tilde;
  /// Observed noisy-label counts in the calibration set, when available.
  std::optional<std::vector<std::size_t>> noisy_counts;

  /// rho_tilde = rho P. An empty prior means uniform.
  static ClassMarginals from_prior(std::span<const double> rho, const Matrix& p);

  /// Checks both vectors sum to one and, when p is given, rho_tilde = rho P.
  void validate(const Matrix* p = nullptr) const;
};

/// sqrt(log(4/delta) / (2 n h^2)) with h = (1 - eps) / (1 + eps). Independent of k.
CorrectionTerm delta_nacp(std::size_t n, double epsilon, double delta_conf);

struct MonteCarloEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Monte Carlo estimate of c(n) = E[max_i (i/n - u_(i))] over uniform order
/// statistics. Sorted uniforms come from normalized exponential spacings.
MonteCarloEstimate c_n_estimate(std::size_t n, std::size_t mc_samples, std::uint64_t seed,
                                std::size_t threads = 1);

/// Backward matrix B(i, j) = p(clean = j | noisy = i) = P(j, i) rho_j / rho_tilde_i.
Matrix backward_noise_matrix(const Matrix& p, std::span<const double> rho);

struct AcnlOptions {
  std::size_t mc_samples = 100'000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// Skips the Monte Carlo run when c(n) is already known for this n.
  std::optional<MonteCarloEstimate> c_n;
};

/// Correction of the adaptive noisy-label CP method:
/// c(n) + (2 max_i sum_{l!=i} |V_il| + sum_i |rho_i - rho~_i|) / sqrt(n*)
///        * min(k^2 sqrt(pi/2), 1/sqrt(n*) + sqrt((log(2k^2) + log n*) / 2))
/// with V the inverse backward matrix and n* the smallest noisy class count.
CorrectionTerm delta_acnl(std::size_t n, const Matrix& p, const ClassMarginals& marginals,
                          const AcnlOptions& options = {});

/// Correction of the contamination-robust CP method:
/// sum_i (|w1_i| b(n,i) + sum_{j!=i} |w2_ij| b(n,j)),
/// b(n,j) = (1 - rho~_j)^n + sqrt(pi / (n rho~_j)).
CorrectionTerm delta_crcp(std::size_t n, const Matrix& p, const ClassMarginals& marginals);

struct AdjustedLevel {
  double level = 0.0;
  /// level >= 1: the prediction set must contain every class.
  bool trivial_set = false;
};

AdjustedLevel apply_correction(const CoverageSpec& spec, const CorrectionTerm& term);
AdjustedLevel apply_correction(const CoverageSpec& spec, double delta_value);

}  // namespace noisycp
