#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ink {

/// Deterministic RNG. mt19937_64 has a standard-defined output sequence, and
/// the value transforms below avoid standard-library distribution objects
/// (whose algorithms are implementation-defined), so any draw is reproducible
/// across toolchains given the same seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Box-Muller normal draw.
  double normal(double mean = 0.0, double sigma = 1.0);

  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Index draw proportional to non-negative weights.
  std::size_t categorical(const std::vector<double>& weights);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64-style combine; used to derive stream seeds from (seed, salt).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

/// Zipf sampling weights w_k = 1/(k+1)^exponent for k in [0, n).
std::vector<double> zipf_weights(std::size_t n, double exponent);

}  // namespace ink
