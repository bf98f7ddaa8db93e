#pragma once

// LSB family: plain LSB, histogram-preserving LSB+ (embed until a unit's
// pair quota is exhausted, then restore the histogram intentionally), and the
// improved variant that locks a key2-ordered prefix of each unbalanced unit so
// the free pixels start with matched quotas.
//
// A unit is the value pair {2i, 2i+1}; flipping an LSB never leaves it.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stegolab/bits.hpp"
#include "stegolab/error.hpp"
#include "stegolab/imageio.hpp"
#include "stegolab/prng.hpp"
#include "stegolab/steganalysis.hpp"

namespace stegolab::lsb {

using imageio::GrayImage;

struct KeySet {
  std::uint64_t key1 = 0;  // message encryption
  std::uint64_t key2 = 0;  // lock priorities
  std::uint64_t key3 = 0;  // traversal order
};

enum class Method { lsb, lsbplus, improved };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::lsb: return "lsb";
    case Method::lsbplus: return "lsbplus";
    case Method::improved: return "lsbplus-improved";
  }
  return "?";
}

/// XOR with the key1 keystream. Self-inverse.
inline Bits keystream_xor(std::span<const std::uint8_t> bits, std::uint64_t key1) {
  const Bits ks = keystream_bits(key1, bits.size());
  Bits out(bits.begin(), bits.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= ks[i];
  return out;
}

inline Bits keystream_encrypt(std::span<const std::uint8_t> msg, std::uint64_t key1) {
  return keystream_xor(frame_message(msg), key1);
}

/// Expected histogram after flipping each LSB with probability P.
inline std::array<double, 256> predict_histogram(const std::array<double, 256>& h, double p) {
  if (!(p >= 0.0 && p <= 1.0)) fail(Errc::invalid_argument, "P must be in [0, 1]");
  std::array<double, 256> out{};
  for (std::size_t i = 0; i < 128; ++i) {
    out[2 * i] = p * h[2 * i + 1] + (1.0 - p) * h[2 * i];
    out[2 * i + 1] = p * h[2 * i] + (1.0 - p) * h[2 * i + 1];
  }
  return out;
}

// --- plain LSB ---------------------------------------------------------------

inline GrayImage lsb_embed(const GrayImage& cover, std::span<const std::uint8_t> bits, std::uint64_t key3) {
  if (bits.size() > cover.size())
    throw Error(Errc::capacity_exceeded, "more bits than pixels", cover.size());
  GrayImage out = cover;
  const auto order = priority_order(key3, cover.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    auto& px = out.pixels[order[i]];
    px = static_cast<std::uint8_t>((px & 0xFE) | (bits[i] & 1U));
  }
  return out;
}

inline Bits lsb_extract(const GrayImage& stego, std::uint64_t key3, std::size_t nbits) {
  if (nbits > stego.size()) throw Error(Errc::capacity_exceeded, "more bits than pixels", stego.size());
  const auto order = priority_order(key3, stego.size());
  Bits out(nbits);
  for (std::size_t i = 0; i < nbits; ++i) out[i] = stego.pixels[order[i]] & 1U;
  return out;
}

// --- locks -------------------------------------------------------------------

struct UnitStats {
  std::uint64_t h[2] = {0, 0};   // cover counts of 2i, 2i+1
  std::uint64_t imbalance = 0;   // A_i
  int majority = 0;              // LSB of the majority value (0 when balanced)
  std::uint64_t skipped_minority = 0;  // b_i
  std::uint64_t quota[2] = {0, 0};     // free-value quotas indexed by LSB
};

struct LockSet {
  std::array<UnitStats, 128> units{};
  std::vector<std::uint8_t> skipped;  // per pixel

  std::size_t skipped_count() const {
    std::size_t n = 0;
    for (auto s : skipped) n += s;
    return n;
  }
};

namespace detail {

inline std::array<UnitStats, 128> unit_counts(const GrayImage& img) {
  std::array<UnitStats, 128> u{};
  for (std::uint8_t v : img.pixels) ++u[v >> 1].h[v & 1];
  for (auto& s : u) {
    s.majority = s.h[1] > s.h[0] ? 1 : 0;
    s.imbalance = s.h[s.majority] - s.h[1 - s.majority];
  }
  return u;
}

}  // namespace detail

/// Locks for an explicit priority order (positions listed by ascending
/// priority). Each unbalanced unit skips its priority prefix up to and
/// including the A_i-th majority-valued position.
inline LockSet compute_locks(const GrayImage& img, std::span<const std::uint32_t> order) {
  if (order.size() != img.size()) fail(Errc::dimension_mismatch, "priority order must cover every pixel");
  LockSet ls;
  ls.units = detail::unit_counts(img);
  ls.skipped.assign(img.size(), 0);
  std::array<std::uint64_t, 128> remaining{};
  for (std::size_t u = 0; u < 128; ++u) remaining[u] = ls.units[u].imbalance;
  for (std::uint32_t p : order) {
    const std::uint8_t v = img.pixels[p];
    UnitStats& s = ls.units[v >> 1];
    if (remaining[v >> 1] == 0) continue;
    ls.skipped[p] = 1;
    if ((v & 1) == s.majority) --remaining[v >> 1];
    else ++s.skipped_minority;
  }
  for (auto& s : ls.units) {
    const std::uint64_t minority = s.h[1 - s.majority];
    s.quota[s.majority] = minority;
    s.quota[1 - s.majority] = minority - s.skipped_minority;
  }
  return ls;
}

inline LockSet compute_locks(const GrayImage& img, std::uint64_t key2) {
  const auto order = priority_order(key2, img.size());
  return compute_locks(img, std::span<const std::uint32_t>(order));
}

/// LSB+ has no locks: every position is free and quotas are the cover counts.
inline LockSet free_locks(const GrayImage& img) {
  LockSet ls;
  ls.units = detail::unit_counts(img);
  ls.skipped.assign(img.size(), 0);
  for (auto& s : ls.units) {
    s.quota[0] = s.h[0];
    s.quota[1] = s.h[1];
  }
  return ls;
}

// --- closure walk ------------------------------------------------------------

namespace detail {

/// Tallies of written (or read) free values per unit with the closure rule:
/// a unit closes once either tally reaches its quota; quota 0 closes it from
/// the start.
class ClosureState {
 public:
  explicit ClosureState(const LockSet& ls) : ls_(ls) {
    for (std::size_t u = 0; u < 128; ++u)
      closed_[u] = ls.units[u].quota[0] == 0 || ls.units[u].quota[1] == 0;
  }

  bool open(std::size_t unit) const { return !closed_[unit]; }

  void record(std::size_t unit, int lsb) {
    const auto& q = ls_.units[unit].quota;
    if (++tally_[unit][lsb] >= q[lsb]) closed_[unit] = true;
  }

  std::uint64_t tally(std::size_t unit, int lsb) const { return tally_[unit][lsb]; }

 private:
  const LockSet& ls_;
  std::array<std::array<std::uint64_t, 2>, 128> tally_{};
  std::array<bool, 128> closed_{};
};

struct WalkResult {
  std::size_t written = 0;
  std::size_t intentional = 0;  // free positions written in the restoration phase
  std::size_t flips = 0;        // of those, pixels whose value actually changed
};

/// Writes `bits` into free positions of open units in `order`, then fills
/// the untouched free positions with the fewest flips that restore the
/// quotas. Throws capacity_exceeded (with the count that fit) when the walk
/// runs out of positions first.
inline WalkResult histogram_preserving_write(GrayImage& img, const LockSet& ls,
                                             std::span<const std::uint32_t> order,
                                             std::span<const std::uint8_t> bits, bool fill = true) {
  ClosureState st(ls);
  std::vector<std::uint8_t> touched(img.size(), 0);
  WalkResult res;
  for (std::uint32_t p : order) {
    if (res.written == bits.size()) break;
    if (ls.skipped[p]) continue;
    const std::size_t unit = img.pixels[p] >> 1;
    if (!st.open(unit)) continue;
    const int b = bits[res.written++] & 1;
    img.pixels[p] = static_cast<std::uint8_t>((unit << 1) | static_cast<std::size_t>(b));
    touched[p] = 1;
    st.record(unit, b);
  }
  if (res.written < bits.size())
    throw Error(Errc::capacity_exceeded,
                "stream needs " + std::to_string(bits.size()) + " bits, walk fits " + std::to_string(res.written),
                res.written);
  if (!fill) return res;

  // Intentional phase: every untouched free position is rewritten so each
  // unit ends with exactly quota - tally of each value. The value already
  // present is kept where possible; only the surplus side is flipped, in
  // traversal order.
  std::array<std::int64_t, 128> surplus_even{};
  for (std::uint32_t p : order) {
    if (ls.skipped[p] || touched[p]) continue;
    if ((img.pixels[p] & 1) == 0) ++surplus_even[img.pixels[p] >> 1];
  }
  for (std::size_t u = 0; u < 128; ++u)
    surplus_even[u] -= static_cast<std::int64_t>(ls.units[u].quota[0] - st.tally(u, 0));
  for (std::uint32_t p : order) {
    if (ls.skipped[p] || touched[p]) continue;
    ++res.intentional;
    auto& px = img.pixels[p];
    std::int64_t& s = surplus_even[px >> 1];
    if (s > 0 && (px & 1) == 0) {
      px |= 1;
      --s;
      ++res.flips;
    } else if (s < 0 && (px & 1) == 1) {
      px &= 0xFE;
      ++s;
      ++res.flips;
    }
  }
  return res;
}

/// Mirror of the write walk: collects LSBs from free positions of open
/// units until the decrypted header length is satisfied.
inline Bits histogram_preserving_read(const GrayImage& img, const LockSet& ls,
                                      std::span<const std::uint32_t> order, std::uint64_t key1) {
  ClosureState st(ls);
  Bits raw;
  std::size_t need = kHeaderBits;
  for (std::uint32_t p : order) {
    if (raw.size() == need) break;
    if (ls.skipped[p]) continue;
    const std::size_t unit = img.pixels[p] >> 1;
    if (!st.open(unit)) continue;
    const int b = img.pixels[p] & 1;
    raw.push_back(static_cast<std::uint8_t>(b));
    st.record(unit, b);
    if (raw.size() == kHeaderBits) {
      const std::uint32_t len = read_header(keystream_xor(raw, key1));
      if (len % 8 != 0) fail(Errc::corrupt_stream, "decrypted length is not a whole number of bytes");
      need = kHeaderBits + len;
    }
  }
  if (raw.size() < need) fail(Errc::corrupt_stream, "header length exceeds the embeddable stream");
  return keystream_xor(raw, key1);
}

}  // namespace detail

struct LsbReport {
  Method method = Method::lsb;
  std::size_t capacity_bits = 0;
  std::size_t used_bits = 0;
  std::size_t intentional_count = 0;
  std::size_t intentional_flips = 0;
  double psnr_db = 0.0;
  std::uint64_t hist_change = 0;
};

struct LsbResult {
  GrayImage stego;
  LsbReport report;
};

inline LockSet locks_for(const GrayImage& img, Method m, const KeySet& keys) {
  return m == Method::improved ? compute_locks(img, keys.key2) : free_locks(img);
}

/// Largest framed stream the method accepts, by a dry run with the key1
/// keystream (the encryption of an all-zero stream).
inline std::size_t effective_capacity(const GrayImage& img, Method m, const KeySet& keys) {
  if (m == Method::lsb) return img.size();
  const LockSet ls = locks_for(img, m, keys);
  const auto order = priority_order(keys.key3, img.size());
  GrayImage scratch = img;
  const Bits probe = keystream_bits(keys.key1, img.size());
  try {
    detail::histogram_preserving_write(scratch, ls, order, probe, false);
  } catch (const Error& e) {
    if (e.capacity()) return *e.capacity();
    throw;
  }
  return probe.size();
}

inline LsbResult embed(const GrayImage& cover, std::span<const std::uint8_t> msg, Method m, const KeySet& keys) {
  LsbResult out;
  out.report.method = m;
  out.report.capacity_bits = effective_capacity(cover, m, keys);
  if (m == Method::lsb) {
    const Bits framed = frame_message(msg);
    out.stego = lsb_embed(cover, framed, keys.key3);
    out.report.used_bits = framed.size();
  } else {
    const Bits stream = keystream_encrypt(msg, keys.key1);
    const LockSet ls = locks_for(cover, m, keys);
    const auto order = priority_order(keys.key3, cover.size());
    out.stego = cover;
    const auto walk = detail::histogram_preserving_write(out.stego, ls, order, stream);
    out.report.used_bits = walk.written;
    out.report.intentional_count = walk.intentional;
    out.report.intentional_flips = walk.flips;
  }
  out.report.psnr_db = analysis::psnr(cover, out.stego);
  out.report.hist_change = analysis::hist_change(out.stego);
  return out;
}

inline Bytes extract(const GrayImage& stego, Method m, const KeySet& keys) {
  if (m == Method::lsb) {
    const Bits head = lsb_extract(stego, keys.key3, std::min(kHeaderBits, stego.size()));
    const std::uint32_t len = read_header(head);
    if (len % 8 != 0) fail(Errc::corrupt_stream, "length is not a whole number of bytes");
    if (len > stego.size() - kHeaderBits) fail(Errc::corrupt_stream, "header length exceeds pixel count");
    return unframe_message(lsb_extract(stego, keys.key3, kHeaderBits + len));
  }
  const LockSet ls = locks_for(stego, m, keys);
  const auto order = priority_order(keys.key3, stego.size());
  return unframe_message(detail::histogram_preserving_read(stego, ls, order, keys.key1));
}

inline LsbResult improved_embed(const GrayImage& cover, std::span<const std::uint8_t> msg, const KeySet& keys) {
  return embed(cover, msg, Method::improved, keys);
}

inline Bytes improved_extract(const GrayImage& stego, const KeySet& keys) {
  return extract(stego, Method::improved, keys);
}

inline LsbResult lsbplus_embed(const GrayImage& cover, std::span<const std::uint8_t> msg, std::uint64_t key3,
                               std::uint64_t key1) {
  return embed(cover, msg, Method::lsbplus, {key1, 0, key3});
}

inline Bytes lsbplus_extract(const GrayImage& stego, std::uint64_t key3, std::uint64_t key1) {
  return extract(stego, Method::lsbplus, {key1, 0, key3});
}

}  // namespace stegolab::lsb
