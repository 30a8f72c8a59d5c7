#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace dsrr {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/**
 * Stream-splitting rule: key = mix64(fnv1a(tag) ^ mix64(seed)).
 *
 * Every randomized object derives its key from a short tag naming what it
 * draws (operator kind, "sdca-perm", "synth", ...) and the user seed, so two
 * objects built from the same seed never share a stream.
 */
constexpr std::uint64_t stream_key(std::string_view tag, std::uint64_t seed) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return mix64(h ^ mix64(seed));
}

/**
 * Counter-based generator. The value at position `c` of stream `key` is
 * mix64(mix64(c + mix64(key)) ^ key), so any draw can be regenerated without
 * replaying the stream. Dense projection entries rely on this to be
 * regenerated block-wise bit-identically to the materialized matrix.
 *
 * Gaussians use Box-Muller with the cosine branch only: draw number c
 * consumes counters 2c and 2c+1.
 */
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), salt_(mix64(key)), counter_(counter) {}

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t bits_at(std::uint64_t c) const noexcept { return mix64(mix64(c + salt_) ^ key_); }

  /// Uniform in [0, 1) with 53 bits.
  double uniform_at(std::uint64_t c) const noexcept {
    return static_cast<double>(bits_at(c) >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n), n > 0 (multiply-high, no modulo bias worth noting at 64 bits).
  std::uint64_t below_at(std::uint64_t c, std::uint64_t n) const noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits_at(c)) * n) >> 64);
  }

  double normal_at(std::uint64_t c) const noexcept {
    const double u1 = (static_cast<double>(bits_at(2 * c) >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform_at(2 * c + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t next_bits() noexcept { return bits_at(counter_++); }
  double uniform() noexcept { return uniform_at(counter_++); }
  std::uint64_t below(std::uint64_t n) noexcept { return below_at(counter_++, n); }
  double normal() noexcept { return normal_at(counter_++); }

  /// Fisher-Yates shuffle; platform independent (unlike std::shuffle).
  template <class T>
  void shuffle(std::vector<T>& v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t salt_;
  std::uint64_t counter_;
};

}  // namespace dsrr
