#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace maskshare::util {

// splitmix64 finalizer; used to derive decorrelated seeds from (seed, salt) pairs.
std::uint64_t mix64(std::uint64_t x);

// Derives a child seed from a base seed and a textual label plus optional indices.
// Reproducible across platforms; used to give every component its own stream.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// Deterministic random source. All floating-point draws are generated from raw
// 64-bit outputs with fixed arithmetic (no std::*_distribution), so sequences
// are identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(mix64(seed ^ 0x9e3779b97f4a7c15ull)) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; caches the spare deviate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    spare_ = mag * std::sin(two_pi * u2);
    has_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

  // Uniform integer in [0, n); n > 0. Rejection sampling, no modulo bias.
  int uniform_int(int n);

  // Fisher-Yates shuffle driven by this stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(
          uniform_int(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace maskshare::util
