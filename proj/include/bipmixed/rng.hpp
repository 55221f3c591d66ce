#pragma once

#include <cstdint>
#include <random>

namespace bipmixed {

/// SplitMix64 finalizer. Used to derive independent substream seeds from a
/// master seed and a counter (replicate index, method id, ...).
std::uint64_t mix64(std::uint64_t x);

/// Seed for substream `index` of `master`. Pure function of its inputs, so
/// work can be scheduled on any number of workers without changing draws.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Gamma(shape, scale = 1).
  double gamma(double shape);
  /// Inverse gamma with shape a and scale b: density ∝ x^{-a-1} exp(-b/x).
  double inv_gamma(double shape, double scale) { return scale / gamma(shape); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bipmixed
