#include <gtest/gtest.h>

#include <cmath>

#include "expect_errc.hpp"
#include "noisycp/synth.hpp"

namespace noisycp {
namespace {

SynthConfig config(std::size_t k, std::size_t n, double mu, std::uint64_t seed = 1) {
  SynthConfig c;
  c.k = k;
  c.n = n;
  c.signal_mu = mu;
  c.seed = seed;
  return c;
}

double binomial_sigma(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

TEST(Generate, NoSignalIsChance) {
  const auto data = generate(config(10, 100000, 0.0));
  EXPECT_NEAR(top1_accuracy(data), 0.1, 3.0 * binomial_sigma(0.1, 100000));
}

TEST(Generate, StrongSignalIsAlwaysRight) {
  const auto data = generate(config(10, 20000, 50.0));
  EXPECT_GE(top1_accuracy(data), 1.0 - 3.0 * binomial_sigma(0.999, 20000));
}

TEST(Generate, HundredClassAccuracyBand) {
  // P(Z + 3 > max of 99 standard normals) = 0.67786 by quadrature, +-3 binomial sigma.
  const auto data = generate(config(100, 100000, 3.0, 2024));
  const double acc = top1_accuracy(data);
  EXPECT_GE(acc, 0.6734);
  EXPECT_LE(acc, 0.6823);
}

TEST(Generate, PriorIsRespected) {
  SynthConfig c = config(3, 60000, 1.0);
  c.class_prior = {0.6, 0.3, 0.1};
  const auto data = generate(c);
  std::vector<double> freq(3, 0.0);
  for (int y : data.labels) freq[static_cast<std::size_t>(y)] += 1.0 / 60000;
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(freq[j], c.class_prior[j], 4.0 * binomial_sigma(c.class_prior[j], 60000));
}

TEST(Generate, DeterministicAcrossThreads) {
  const auto a = generate(config(7, 3000, 2.0, 5), 1);
  const auto b = generate(config(7, 3000, 2.0, 5), 3);
  EXPECT_EQ(a.probs, b.probs);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(generate(config(7, 3000, 2.0, 6)).labels, a.labels);
}

TEST(Generate, InvalidConfig) {
  EXPECT_ERRC(generate(config(1, 10, 1.0)), Errc::InvalidConfig);
  EXPECT_ERRC(generate(config(3, 0, 1.0)), Errc::InvalidConfig);
  SynthConfig c = config(3, 10, 1.0);
  c.logit_sigma = 0.0;
  EXPECT_ERRC(generate(c), Errc::InvalidConfig);
  c = config(3, 10, 1.0);
  c.class_prior = {0.5, 0.5, 0.5};
  EXPECT_ERRC(generate(c), Errc::InvalidConfig);
}

TEST(InjectNoise, NoNoiseKeepsLabels) {
  const auto data = generate(config(5, 1000, 1.0));
  EXPECT_EQ(inject_noise(data.labels, 5, UniformNoise{0.0}, 3), data.labels);
}

TEST(InjectNoise, FullNoiseTwoClasses) {
  const std::vector<int> labels(100000, 1);
  const auto noisy = inject_noise(labels, 2, UniformNoise{0.999999}, 4);
  std::size_t flips = 0;
  for (int y : noisy) flips += y != 1;
  EXPECT_NEAR(static_cast<double>(flips) / 100000, 0.5, 0.005);
}

TEST(InjectNoise, FlipFraction) {
  const auto data = generate(config(10, 100000, 1.0));
  const auto noisy = inject_noise(data.labels, 10, UniformNoise{0.2}, 8);
  std::size_t flips = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i) flips += noisy[i] != data.labels[i];
  EXPECT_NEAR(static_cast<double>(flips) / 100000, 0.18, 0.004);
}

void expect_transition_matches(const NoiseModel& noise, const std::vector<int>& clean, std::size_t k,
                               std::uint64_t seed) {
  const Matrix p = noise_matrix(noise, k);
  const auto noisy = inject_noise(clean, k, noise, seed);
  const Matrix emp = empirical_transition(clean, noisy, k);
  std::vector<std::size_t> rows(k, 0);
  for (int y : clean) ++rows[static_cast<std::size_t>(y)];
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      EXPECT_LE(std::abs(emp(i, j) - p(i, j)), 5.0 * binomial_sigma(p(i, j), rows[i]) + 1e-12)
          << i << "," << j;
}

TEST(InjectNoise, TransitionFrequenciesConverge) {
  for (std::size_t k : {2u, 5u, 20u}) {
    expect_transition_matches(UniformNoise{0.3}, generate(config(k, 100000, 1.0, k)).labels, k, 9);
  }
  const Matrix p(3, 3, {0.7, 0.2, 0.1, 0.05, 0.9, 0.05, 0.3, 0.0, 0.7});
  expect_transition_matches(GeneralNoise{p}, generate(config(3, 100000, 1.0, 2)).labels, 3, 10);
}

TEST(InjectNoise, Reproducible) {
  const auto data = generate(config(4, 5000, 1.0));
  EXPECT_EQ(inject_noise(data.labels, 4, UniformNoise{0.4}, 1), inject_noise(data.labels, 4, UniformNoise{0.4}, 1));
  EXPECT_NE(inject_noise(data.labels, 4, UniformNoise{0.4}, 1), inject_noise(data.labels, 4, UniformNoise{0.4}, 2));
}

}  // namespace
}  // namespace noisycp
