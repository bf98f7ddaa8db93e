#pragma once

// Bit-stream helpers shared by the embedding pipelines. Bits are stored one
// per byte (0 or 1).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stegolab/error.hpp"

namespace stegolab {

using Bits = std::vector<std::uint8_t>;
using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kHeaderBits = 32;

inline Bits bytes_to_bits(std::span<const std::uint8_t> bytes) {
  Bits out;
  out.reserve(bytes.size() * 8);
  for (std::uint8_t b : bytes)
    for (int i = 7; i >= 0; --i) out.push_back((b >> i) & 1U);
  return out;
}

inline Bytes bits_to_bytes(std::span<const std::uint8_t> bits) {
  if (bits.size() % 8 != 0) fail(Errc::invalid_argument, "bit count not a multiple of 8");
  Bytes out(bits.size() / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    out[i / 8] = static_cast<std::uint8_t>(out[i / 8] | ((bits[i] & 1U) << (7 - i % 8)));
  return out;
}

/// 32-bit big-endian message-bit count followed by the message bits.
inline Bits frame_message(std::span<const std::uint8_t> msg) {
  const std::uint64_t nbits = static_cast<std::uint64_t>(msg.size()) * 8;
  if (nbits > 0xFFFFFFFFULL) fail(Errc::invalid_argument, "message too long to frame");
  Bits out;
  out.reserve(kHeaderBits + nbits);
  for (int i = 31; i >= 0; --i) out.push_back((nbits >> i) & 1U);
  const Bits body = bytes_to_bits(msg);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

inline std::uint32_t read_header(std::span<const std::uint8_t> bits) {
  if (bits.size() < kHeaderBits) fail(Errc::truncated_stream, "fewer than 32 header bits");
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < kHeaderBits; ++i) v = (v << 1) | (bits[i] & 1U);
  return v;
}

/// Inverse of frame_message. Throws truncated_stream when the header claims
/// more bits than are present and corrupt_stream on a non-byte length.
inline Bytes unframe_message(std::span<const std::uint8_t> bits) {
  const std::uint32_t nbits = read_header(bits);
  if (nbits % 8 != 0) fail(Errc::corrupt_stream, "header length not a multiple of 8");
  if (bits.size() - kHeaderBits < nbits)
    fail(Errc::truncated_stream, "header length exceeds available bits");
  return bits_to_bytes(bits.subspan(kHeaderBits, nbits));
}

}  // namespace stegolab
