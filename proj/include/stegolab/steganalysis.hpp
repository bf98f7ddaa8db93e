#pragma once

// Histogram tools, the pair-of-values chi-square attack, quality metrics and
// the salt-and-pepper channel.

#include <boost/math/special_functions/gamma.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "stegolab/error.hpp"
#include "stegolab/imageio.hpp"
#include "stegolab/prng.hpp"

namespace stegolab::analysis {

using imageio::GrayImage;
using Histogram = std::array<std::uint64_t, 256>;

inline Histogram histogram(const GrayImage& img) {
  Histogram h{};
  for (std::uint8_t v : img.pixels) ++h[v];
  return h;
}

inline std::uint64_t hist_change(const Histogram& h) {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < 128; ++i) {
    const std::uint64_t a = h[2 * i], b = h[2 * i + 1];
    s += a > b ? a - b : b - a;
  }
  return s;
}

inline std::uint64_t hist_change(const GrayImage& img) { return hist_change(histogram(img)); }

inline void require_same_dims(const GrayImage& a, const GrayImage& b) {
  if (a.width != b.width || a.height != b.height) fail(Errc::dimension_mismatch, "image sizes differ");
}

inline double mse(const GrayImage& a, const GrayImage& b) {
  require_same_dims(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.pixels.size());
}

/// 10 log10(255^2 / MSE); +infinity for identical images.
inline double psnr(const GrayImage& a, const GrayImage& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

struct ChiSquare {
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 0.0;
};

/// Pair-of-values test. Pairs whose expected count falls below
/// `min_expected` are left out; p is the upper tail of the chi-square
/// distribution, so p near 1 means the pairs look equalized (LSB-like).
inline ChiSquare chi_square_attack(const Histogram& h, double min_expected = 4.0) {
  ChiSquare out;
  int kept = 0;
  for (std::size_t i = 0; i < 128; ++i) {
    const double e = (static_cast<double>(h[2 * i]) + static_cast<double>(h[2 * i + 1])) / 2.0;
    if (e < min_expected || e <= 0.0) continue;
    const double d = static_cast<double>(h[2 * i]) - e;
    out.chi2 += d * d / e;
    ++kept;
  }
  if (kept < 2) fail(Errc::insufficient_statistics, "fewer than 2 usable value pairs");
  out.dof = kept - 1;
  out.p_value = boost::math::gamma_q(out.dof / 2.0, out.chi2 / 2.0);
  return out;
}

inline ChiSquare chi_square_attack(const GrayImage& img, double min_expected = 4.0) {
  return chi_square_attack(histogram(img), min_expected);
}

struct Cooccurrence {
  std::vector<std::uint64_t> counts = std::vector<std::uint64_t>(256 * 256, 0);

  std::uint64_t at(std::size_t i, std::size_t j) const { return counts[i * 256 + j]; }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
};

/// Counts of (g(x,y), g(x+dx, y+dy)) over in-bounds positions, no wraparound.
inline Cooccurrence cooccurrence(const GrayImage& img, int dx, int dy) {
  const auto w = static_cast<long>(img.width), h = static_cast<long>(img.height);
  if (std::abs(dx) >= w || std::abs(dy) >= h) fail(Errc::invalid_argument, "offset exceeds image size");
  Cooccurrence c;
  for (long y = std::max(0L, -static_cast<long>(dy)); y < std::min(h, h - dy); ++y)
    for (long x = std::max(0L, -static_cast<long>(dx)); x < std::min(w, w - dx); ++x) {
      const std::uint8_t a = img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
      const std::uint8_t b = img.at(static_cast<std::size_t>(x + dx), static_cast<std::size_t>(y + dy));
      ++c.counts[static_cast<std::size_t>(a) * 256 + b];
    }
  return c;
}

/// Mean absolute entrywise difference of two co-occurrence matrices.
inline double cooccurrence_change(const GrayImage& a, const GrayImage& b, int dx = 1, int dy = 0) {
  require_same_dims(a, b);
  const Cooccurrence ca = cooccurrence(a, dx, dy), cb = cooccurrence(b, dx, dy);
  double s = 0.0;
  for (std::size_t i = 0; i < ca.counts.size(); ++i)
    s += std::abs(static_cast<double>(ca.counts[i]) - static_cast<double>(cb.counts[i]));
  return s / static_cast<double>(ca.counts.size());
}

struct NoisyImage {
  GrayImage image;
  double snr_db = 0.0;  // 10 log10(sum cover^2 / sum (noisy - cover)^2)
  std::size_t replaced = 0;
};

/// Salt-and-pepper channel. Each pixel takes two draws (hit, polarity), so
/// for a fixed seed the hit set grows monotonically with density.
inline NoisyImage salt_pepper(const GrayImage& img, double density, std::uint64_t seed) {
  if (!(density >= 0.0 && density <= 1.0)) fail(Errc::invalid_argument, "density must be in [0, 1]");
  NoisyImage out{img, std::numeric_limits<double>::infinity(), 0};
  KeyedPrng prng(seed);
  double sig = 0.0, noise = 0.0;
  for (auto& px : out.image.pixels) {
    const double u = prng.uniform();
    const bool salt = prng.bit();
    const double orig = px;
    sig += orig * orig;
    if (u < density) {
      px = salt ? 255 : 0;
      ++out.replaced;
    }
    const double d = static_cast<double>(px) - orig;
    noise += d * d;
  }
  if (noise > 0.0) out.snr_db = 10.0 * std::log10(sig / noise);
  return out;
}

/// Bisection on density so the realized SNR lands on `target_db`.
inline double calibrate_salt_pepper(const GrayImage& img, double target_db, std::uint64_t seed,
                                    int steps = 40) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (salt_pepper(img, mid, seed).snr_db > target_db) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double ber(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) fail(Errc::dimension_mismatch, "bit streams differ in length");
  if (a.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] & 1U) != (b[i] & 1U);
  return static_cast<double>(diff) / static_cast<double>(a.size());
}

}  // namespace stegolab::analysis
