#include "noisycp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "noisycp/error.hpp"
#include "noisycp/parallel.hpp"
#include "noisycp/random.hpp"

namespace noisycp {
namespace {

// Inverse-CDF draw from a discrete distribution; the last class absorbs
// rounding in the cumulative sum.
int draw_class(std::span<const double> probs, double u) {
  double cumulative = 0.0;
  for (std::size_t j = 0; j + 1 < probs.size(); ++j) {
    cumulative += probs[j];
    if (u < cumulative) return static_cast<int>(j);
  }
  return static_cast<int>(probs.size() - 1);
}

}  // namespace

void SynthConfig::validate() const {
  if (k < 2) throw Error(Errc::InvalidConfig, "k must be >= 2");
  if (n < 1) throw Error(Errc::InvalidConfig, "n must be >= 1");
  if (!(logit_sigma > 0.0)) throw Error(Errc::InvalidConfig, "logit_sigma must be > 0");
  if (!std::isfinite(signal_mu)) throw Error(Errc::InvalidConfig, "signal_mu must be finite");
  if (!class_prior.empty()) {
    if (class_prior.size() != k) throw Error(Errc::InvalidConfig, "class_prior length must equal k");
    double sum = 0.0;
    for (double p : class_prior) {
      if (!(p >= 0.0)) throw Error(Errc::InvalidConfig, "class_prior entries must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-8) throw Error(Errc::InvalidConfig, "class_prior must sum to 1");
  }
}

LabeledSet generate(const SynthConfig& config, std::size_t threads) {
  config.validate();
  const std::size_t k = config.k;
  const std::vector<double> prior =
      config.class_prior.empty() ? std::vector<double>(k, 1.0 / static_cast<double>(k)) : config.class_prior;

  std::vector<double> values(config.n * k);
  std::vector<int> labels(config.n);
  parallel_for(config.n, threads, [&](std::size_t i) {
    CounterStream stream(config.seed, StreamDomain::Generate, i);
    const int y = draw_class(prior, stream.uniform());
    std::normal_distribution<double> noise(0.0, config.logit_sigma);
    double* row = values.data() + i * k;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = noise(stream) + (static_cast<int>(j) == y ? config.signal_mu : 0.0);
    }
    const double top = *std::max_element(row, row + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = std::exp(row[j] - top);
      sum += row[j];
    }
    for (std::size_t j = 0; j < k; ++j) row[j] /= sum;
    labels[i] = y;
  });
  return LabeledSet::validate(ProbabilityMatrix::validate(config.n, k, std::move(values)),
                              std::move(labels));
}

std::vector<int> inject_noise(std::span<const int> labels, std::size_t k, const NoiseModel& noise,
                              std::uint64_t seed) {
  validate_noise_model(noise);
  validate_labels(labels, k);
  std::vector<int> out(labels.begin(), labels.end());

  if (const auto* u = std::get_if<UniformNoise>(&noise)) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      CounterStream stream(seed, StreamDomain::InjectNoise, i);
      if (stream.uniform() < u->epsilon) {
        out[i] = static_cast<int>(std::min<std::size_t>(
            k - 1, static_cast<std::size_t>(stream.uniform() * static_cast<double>(k))));
      }
    }
    return out;
  }

  const Matrix& p = std::get<GeneralNoise>(noise).p;
  if (p.rows() != k) throw Error(Errc::InvalidArgument, "noise matrix does not match k");
  for (std::size_t i = 0; i < out.size(); ++i) {
    CounterStream stream(seed, StreamDomain::InjectNoise, i);
    out[i] = draw_class(p.row(static_cast<std::size_t>(labels[i])), stream.uniform());
  }
  return out;
}

Matrix empirical_transition(std::span<const int> clean, std::span<const int> noisy, std::size_t k) {
  if (clean.size() != noisy.size()) throw Error(Errc::InvalidArgument, "label vectors differ in length");
  validate_labels(clean, k);
  validate_labels(noisy, k);
  Matrix counts(k, k);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    counts(static_cast<std::size_t>(clean[i]), static_cast<std::size_t>(noisy[i])) += 1.0;
  }
  for (std::size_t i = 0; i < k; ++i) {
    double total = 0.0;
    for (double c : counts.row(i)) total += c;
    if (total > 0.0)
      for (double& c : counts.row(i)) c /= total;
  }
  return counts;
}

double top1_accuracy(const LabeledSet& data) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto row = data.probs.row(i);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best == data.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace noisycp
