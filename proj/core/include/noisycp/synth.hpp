#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "noisycp/types.hpp"

namespace noisycp {

/// Gaussian-logit classifier simulator. The true class gets a logit boost of
/// signal_mu; probabilities are the softmax of the logits.
struct SynthConfig {
  std::size_t k = 10;
  std::size_t n = 1000;
  std::vector<double> class_prior;  // empty = uniform
  double signal_mu = 2.0;
  double logit_sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Draws n samples with clean labels. Sample i only uses the stream keyed by
/// (seed, i), so output is independent of thread count.
LabeledSet generate(const SynthConfig& config, std::size_t threads = 1);

/// Corrupts labels. Uniform: with probability eps the label is replaced by a
/// uniform draw over all k classes (which may return the original label).
/// General: the noisy label is drawn from row y of P.
std::vector<int> inject_noise(std::span<const int> labels, std::size_t k, const NoiseModel& noise,
                              std::uint64_t seed);

/// Row-normalized empirical p(noisy = j | clean = i). Rows with no samples
/// stay zero.
Matrix empirical_transition(std::span<const int> clean, std::span<const int> noisy, std::size_t k);

/// Fraction of rows whose argmax equals the label (first index wins ties).
double top1_accuracy(const LabeledSet& data);

}  // namespace noisycp
