#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace geomort {

// splitmix64 finalizer. The generator below is counter-based: draw i of a
// stream seeded s is mix64(s + (i+1) * golden), so streams can be split and
// replayed independently of call order.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed), counter_(0) {}

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  // Child stream independent of this stream's position.
  CounterRng derive(std::uint64_t tag) const {
    return CounterRng(mix64(seed_ ^ mix64(tag + 0x632BE59BD9B4E019ULL)));
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // Standard normal via Box-Muller. Two draws consumed per call.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Poisson sample; Knuth's method for small means, normal approximation for
  // large ones (the synthetic corpus only needs distributional plausibility).
  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
      const double l = std::exp(-mean);
      long long k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= uniform();
      } while (p > l);
      return k - 1;
    }
    const double v = mean + std::sqrt(mean) * normal();
    return v < 0.0 ? 0 : static_cast<long long>(std::llround(v));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace geomort
