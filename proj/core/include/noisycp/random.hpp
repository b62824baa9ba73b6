#pragma once

#include <cstdint>
#include <limits>

namespace noisycp {

// Stream domains keep draws for different purposes independent even when the
// caller reuses one seed everywhere.
enum class StreamDomain : std::uint64_t {
  RandomizedScore = 1,
  Generate = 2,
  InjectNoise = 3,
  Split = 4,
  OrderStatistics = 5,
  Fuzz = 6,
};

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the output is a pure function of
/// (seed, domain, index, counter), so any sample's draws can be reproduced
/// without replaying the draws of other samples. Satisfies
/// UniformRandomBitGenerator.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  CounterStream(std::uint64_t seed, StreamDomain domain, std::uint64_t index,
                std::uint64_t sub = 0)
      : key_(mix64(seed ^ mix64(static_cast<std::uint64_t>(domain) * 0x9e3779b97f4a7c15ULL ^
                                mix64(index + 0x632be59bd9b4e019ULL) ^
                                mix64(sub * 0x85157af5ULL + 0x2545f4914f6cdd1dULL)))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace noisycp
