#pragma once

// Keyed SplitMix64 streams. Every stochastic choice in the library is drawn
// from here so that runs with equal keys/seeds are bit-identical.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "stegolab/error.hpp"

namespace stegolab {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Random-access priority of `index` under `key`. Injective in index.
constexpr std::uint64_t prng_mix(std::uint64_t key, std::uint64_t index) noexcept {
  return splitmix64_finalize(key ^ (index * kGoldenGamma));
}

class KeyedPrng {
 public:
  explicit constexpr KeyedPrng(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += kGoldenGamma;
    return splitmix64_finalize(state_);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) fail(Errc::invalid_argument, "below(0)");
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r < limit) return r % bound;
    }
  }

  /// Standard normal via Box-Muller (one draw per call, no caching so the
  /// stream position is simple to reason about).
  double gaussian() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Laplace(0, b) sample.
  double laplace(double b = 1.0) noexcept {
    double u = uniform() - 0.5;
    while (u == -0.5) u = uniform() - 0.5;
    return -b * (u < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(u));
  }

  bool bit() noexcept { return (next() >> 63) != 0; }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Keystream bits: each 64-bit draw contributes its bits MSB first.
inline std::vector<std::uint8_t> keystream_bits(std::uint64_t key, std::size_t count) {
  std::vector<std::uint8_t> out(count);
  KeyedPrng prng(key);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 64 == 0) word = prng.next();
    out[i] = static_cast<std::uint8_t>((word >> (63 - i % 64)) & 1U);
  }
  return out;
}

/// Positions 0..count-1 sorted by ascending prng_mix(key, position).
inline std::vector<std::uint32_t> priority_order(std::uint64_t key, std::size_t count) {
  std::vector<std::uint64_t> prio(count);
  for (std::size_t i = 0; i < count; ++i) prio[i] = prng_mix(key, i);
  std::vector<std::uint32_t> order(count);
  std::iota(order.begin(), order.end(), 0U);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return prio[a] < prio[b]; });
  return order;
}

/// Parses exactly 16 hex digits (an optional 0x prefix is accepted).
inline std::uint64_t parse_hex_key(std::string_view text) {
  if (text.size() >= 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X'))
    text.remove_prefix(2);
  if (text.size() != 16) fail(Errc::invalid_argument, "key must be 16 hex digits");
  std::uint64_t v = 0;
  for (char c : text) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else fail(Errc::invalid_argument, "key must be 16 hex digits");
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

inline std::string format_hex_key(std::uint64_t key) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, key >>= 4) s[i] = kDigits[key & 0xF];
  return s;
}

}  // namespace stegolab
