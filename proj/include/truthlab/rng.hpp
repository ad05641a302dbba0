#pragma once

// Counter-based pseudo-random generator. Each draw is a pure function of
// (key, counter), where the key mixes a 64-bit seed with a hashed stream tag.
// The generator is SplitMix64 viewed as a counter scheme: output_i is the
// SplitMix64 finalizer applied to key + (i+1)*phi. Streams with distinct tags
// are independent for all practical purposes, and any draw can be replayed
// from its index, which is what the golden-trace tests rely on.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace truthlab::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Counter {
 public:
  Counter(std::uint64_t seed, std::string_view stream)
      : key_(mix64(seed + kGolden) ^ mix64(fnv1a64(stream))) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  // Uniform on [0, 1) with 53 random mantissa bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform on [0, n) via masked rejection.
  std::uint64_t next_below(std::uint64_t n) {
    if (n < 2) return 0;
    std::uint64_t mask = ~0ULL >> __builtin_clzll(n - 1);
    std::uint64_t v;
    do {
      v = next_u64() & mask;
    } while (v >= n);
    return v;
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller; 1-u keeps the log argument in (0, 1].
    double u1 = 1.0 - next_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586477 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace truthlab::rng
