#include "noisycp/guarantees.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "noisycp/error.hpp"
#include "noisycp/linalg.hpp"
#include "noisycp/parallel.hpp"
#include "noisycp/random.hpp"

namespace noisycp {
namespace {

void require_n(std::size_t n) {
  if (n < 1) throw Error(Errc::InvalidArgument, "calibration size n must be >= 1");
}

void require_priors_positive(std::span<const double> rho_tilde) {
  for (std::size_t j = 0; j < rho_tilde.size(); ++j) {
    if (!(rho_tilde[j] > 0.0)) {
      throw Error(Errc::ZeroMarginal, "noisy marginal of class " + std::to_string(j) + " is zero");
    }
  }
}

Matrix inverse_backward(const Matrix& p, const ClassMarginals& marginals) {
  require_priors_positive(marginals.rho_tilde);
  return invert_noise_matrix(backward_noise_matrix(p, marginals.rho)).p_inverse;
}

}  // namespace

std::string_view correction_method_name(CorrectionMethod method) {
  switch (method) {
    case CorrectionMethod::NACP: return "nacp";
    case CorrectionMethod::ACNL: return "acnl";
    case CorrectionMethod::CRCP: return "crcp";
  }
  return "unknown";
}

CorrectionMethod parse_correction_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "nacp") return CorrectionMethod::NACP;
  if (lower == "acnl") return CorrectionMethod::ACNL;
  if (lower == "crcp") return CorrectionMethod::CRCP;
  throw Error(Errc::InvalidArgument, "unknown correction method '" + std::string(name) + "'");
}

ClassMarginals ClassMarginals::from_prior(std::span<const double> rho, const Matrix& p) {
  if (!p.square()) throw Error(Errc::InvalidArgument, "noise matrix must be square");
  const std::size_t k = p.rows();
  ClassMarginals m;
  if (rho.empty()) {
    m.rho.assign(k, 1.0 / static_cast<double>(k));
  } else {
    m.rho.assign(rho.begin(), rho.end());
  }
  if (m.rho.size() != k) throw Error(Errc::InvalidArgument, "prior length does not match k");
  m.rho_tilde.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) m.rho_tilde[j] += m.rho[i] * p(i, j);
  m.validate(&p);
  return m;
}

void ClassMarginals::validate(const Matrix* p) const {
  auto check = [](const std::vector<double>& v, const char* name) {
    double sum = 0.0;
    for (double x : v) {
      if (!(x >= 0.0)) throw Error(Errc::InvalidArgument, std::string(name) + " has a negative entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-8) {
      throw Error(Errc::InvalidArgument, std::string(name) + " sums to " + std::to_string(sum));
    }
  };
  if (rho.size() != rho_tilde.size()) throw Error(Errc::InvalidArgument, "marginal lengths differ");
  check(rho, "rho");
  check(rho_tilde, "rho_tilde");
  if (noisy_counts && noisy_counts->size() != rho.size()) {
    throw Error(Errc::InvalidArgument, "noisy count vector length does not match k");
  }
  if (p) {
    if (p->rows() != rho.size()) throw Error(Errc::InvalidArgument, "noise matrix does not match k");
    for (std::size_t j = 0; j < rho.size(); ++j) {
      double expected = 0.0;
      for (std::size_t i = 0; i < rho.size(); ++i) expected += rho[i] * (*p)(i, j);
      if (std::abs(expected - rho_tilde[j]) > 1e-10) {
        throw Error(Errc::InvalidArgument, "rho_tilde is not rho * P at class " + std::to_string(j));
      }
    }
  }
}

CorrectionTerm delta_nacp(std::size_t n, double epsilon, double delta_conf) {
  require_n(n);
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw Error(Errc::InvalidArgument, "epsilon must lie in [0,1)");
  if (!(delta_conf > 0.0 && delta_conf < 1.0)) throw Error(Errc::InvalidArgument, "delta must lie in (0,1)");
  CorrectionTerm t;
  t.method = CorrectionMethod::NACP;
  t.n = n;
  t.epsilon = epsilon;
  t.delta_conf = delta_conf;
  t.h = (1.0 - epsilon) / (1.0 + epsilon);
  t.delta_value = std::sqrt(std::log(4.0 / delta_conf) / (2.0 * static_cast<double>(n) * t.h * t.h));
  return t;
}

MonteCarloEstimate c_n_estimate(std::size_t n, std::size_t mc_samples, std::uint64_t seed,
                                std::size_t threads) {
  require_n(n);
  if (mc_samples < 1) throw Error(Errc::InvalidArgument, "mc_samples must be >= 1");

  std::vector<double> draws(mc_samples);
  const std::size_t chunks = std::min<std::size_t>(mc_samples, 64);
  const std::size_t per_chunk = (mc_samples + chunks - 1) / chunks;
  const auto dn = static_cast<double>(n);

  parallel_for(chunks, threads, [&](std::size_t c) {
    std::vector<double> partial(n);
    std::exponential_distribution<double> exponential(1.0);
    const std::size_t end = std::min(mc_samples, (c + 1) * per_chunk);
    for (std::size_t r = c * per_chunk; r < end; ++r) {
      CounterStream stream(seed, StreamDomain::OrderStatistics, r);
      exponential.reset();
      // u_(i) = S_i / S_{n+1} for cumulative sums S of n+1 unit exponentials.
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += exponential(stream);
        partial[i] = s;
      }
      const double total = s + exponential(stream);
      double best = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        best = std::max(best, static_cast<double>(i + 1) / dn - partial[i] / total);
      }
      draws[r] = best;
    }
  });

  double sum = 0.0;
  for (double d : draws) sum += d;
  const double mean = sum / static_cast<double>(mc_samples);
  double ss = 0.0;
  for (double d : draws) ss += (d - mean) * (d - mean);
  MonteCarloEstimate est;
  est.mean = mean;
  est.stderr_ = mc_samples > 1
                    ? std::sqrt(ss / static_cast<double>(mc_samples - 1) / static_cast<double>(mc_samples))
                    : 0.0;
  return est;
}

Matrix backward_noise_matrix(const Matrix& p, std::span<const double> rho) {
  if (!p.square() || rho.size() != p.rows()) {
    throw Error(Errc::InvalidArgument, "noise matrix and prior dimensions differ");
  }
  const std::size_t k = p.rows();
  std::vector<double> rho_tilde(k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) rho_tilde[j] += rho[i] * p(i, j);
  require_priors_positive(rho_tilde);

  Matrix b(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) b(i, j) = p(j, i) * rho[j] / rho_tilde[i];
  return b;
}

CorrectionTerm delta_acnl(std::size_t n, const Matrix& p, const ClassMarginals& marginals,
                          const AcnlOptions& options) {
  require_n(n);
  validate_noise_model(GeneralNoise{p});
  marginals.validate(&p);
  const std::size_t k = p.rows();

  CorrectionTerm t;
  t.method = CorrectionMethod::ACNL;
  t.n = n;
  t.k = k;
  if (auto eps = detect_uniform_noise(p)) t.epsilon = *eps;

  if (marginals.noisy_counts) {
    t.n_star = *std::min_element(marginals.noisy_counts->begin(), marginals.noisy_counts->end());
  } else {
    const double min_tilde = *std::min_element(marginals.rho_tilde.begin(), marginals.rho_tilde.end());
    t.n_star = static_cast<std::size_t>(std::floor(static_cast<double>(n) * min_tilde + 1e-9));
    t.expected_counts = true;
  }
  if (t.n_star == 0) throw Error(Errc::ZeroClassCount, "least common noisy class has no samples");

  const Matrix v = inverse_backward(p, marginals);
  double max_off = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double off = 0.0;
    for (std::size_t l = 0; l < k; ++l)
      if (l != i) off += std::abs(v(i, l));
    max_off = std::max(max_off, off);
  }
  double marginal_gap = 0.0;
  for (std::size_t i = 0; i < k; ++i) marginal_gap += std::abs(marginals.rho[i] - marginals.rho_tilde[i]);

  const MonteCarloEstimate c = options.c_n ? *options.c_n
                                           : c_n_estimate(n, options.mc_samples, options.seed, options.threads);
  t.c_n = c.mean;
  t.c_n_stderr = c.stderr_;
  t.mc_samples = options.c_n ? 0 : options.mc_samples;

  const auto dk = static_cast<double>(k);
  const auto ns = static_cast<double>(t.n_star);
  const double root_ns = std::sqrt(ns);
  const double cap = std::min(dk * dk * std::sqrt(std::numbers::pi / 2.0),
                              1.0 / root_ns + std::sqrt((std::log(2.0 * dk * dk) + std::log(ns)) / 2.0));
  t.delta_value = t.c_n + (2.0 * max_off + marginal_gap) / root_ns * cap;
  return t;
}

CorrectionTerm delta_crcp(std::size_t n, const Matrix& p, const ClassMarginals& marginals) {
  require_n(n);
  validate_noise_model(GeneralNoise{p});
  marginals.validate(&p);
  const std::size_t k = p.rows();

  CorrectionTerm t;
  t.method = CorrectionMethod::CRCP;
  t.n = n;
  t.k = k;
  if (auto eps = detect_uniform_noise(p)) t.epsilon = *eps;

  // With C(j, i) = p(clean = j | noisy = i) = B(i, j), C^-1 = (B^-1)^T, so
  // C^-1_ii = V_ii and C^-1_ji = V_ij.
  const Matrix v = inverse_backward(p, marginals);
  const auto dn = static_cast<double>(n);
  std::vector<double> b(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double rt = marginals.rho_tilde[j];
    b[j] = std::pow(1.0 - rt, dn) + std::sqrt(std::numbers::pi / (dn * rt));
  }

  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w1 = v(i, i) * marginals.rho[i] - marginals.rho_tilde[i];
    double row = std::abs(w1) * b[i];
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      row += std::abs(marginals.rho[i] * v(i, j)) * b[j];
    }
    total += row;
  }
  t.delta_value = total;
  return t;
}

AdjustedLevel apply_correction(const CoverageSpec& spec, double delta_value) {
  AdjustedLevel out;
  out.level = (1.0 - spec.alpha) + delta_value;
  out.trivial_set = out.level >= 1.0;
  return out;
}

AdjustedLevel apply_correction(const CoverageSpec& spec, const CorrectionTerm& term) {
  return apply_correction(spec, term.delta_value);
}

}  // namespace noisycp
