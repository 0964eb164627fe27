// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DISTALIGN_RNG_HPP
#define DISTALIGN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace distalign {

/// Deterministic generator used everywhere randomness is needed (splits,
/// bootstraps, synthetic worlds, mock noise). Standard-library distributions
/// are avoided on purpose: their draw sequences differ between standard
/// library implementations, and report files must be byte-stable.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  /// splitmix64 step.
  uint64_t nextU64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double nextDouble() { return (nextU64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1) — safe as a log argument.
  double nextOpenDouble() {
    double u;
    do {
      u = nextDouble();
    } while (u <= 0.0);
    return u;
  }

  /// Standard normal via Box-Muller (cosine branch only).
  double nextNormal() {
    double u1 = nextOpenDouble();
    double u2 = nextDouble();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Uniform integer in [0, n). n must be > 0.
  uint64_t nextBelow(uint64_t n) { return nextU64() % n; }

  /// Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(nextBelow(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// FNV-1a, for building sub-stream seeds from string ids.
  static uint64_t hashString(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001B3ull;
    }
    return h;
  }

  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9E3779B97F4A7C15ull + b * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 30)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  uint64_t state_;
};

}  // namespace distalign

#endif  // DISTALIGN_RNG_HPP
