#include <gtest/gtest.h>

#include <set>

#include "stegolab/bits.hpp"
#include "stegolab/prng.hpp"

using namespace stegolab;

// Straight transcription of the SplitMix64 reference recurrence.
static std::uint64_t reference_next(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

TEST(Prng, MatchesReferenceSplitMix64) {
  std::uint64_t ref = 1234567;
  KeyedPrng p(1234567);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(p.next(), reference_next(ref));
}

TEST(Prng, KnownFirstOutputForZeroSeed) {
  KeyedPrng p(0);
  EXPECT_EQ(p.next(), 0xe220a8397b1dcdafULL);
}

TEST(Prng, MixIsInjectiveOverPositions) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100000; ++i) seen.insert(prng_mix(42, i));
  EXPECT_EQ(seen.size(), 100000u);
}

TEST(Prng, PriorityOrderIsPermutationSortedByMix) {
  const auto order = priority_order(7, 500);
  std::set<std::uint32_t> s(order.begin(), order.end());
  EXPECT_EQ(s.size(), 500u);
  for (std::size_t i = 1; i < order.size(); ++i) EXPECT_LT(prng_mix(7, order[i - 1]), prng_mix(7, order[i]));
}

TEST(Prng, BelowStaysInRangeAndUniformIsHalfOpen) {
  KeyedPrng p(9);
  for (int i = 0; i < 10000; ++i) {
    EXPECT_LT(p.below(7), 7u);
    const double u = p.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Prng, GaussianMoments) {
  KeyedPrng p(5);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = p.gaussian();
    s += g;
    s2 += g * g;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Prng, KeystreamBalanced) {
  const Bits ks = keystream_bits(0xabcdef, 200000);
  std::size_t ones = 0;
  for (auto b : ks) ones += b;
  EXPECT_LT(std::abs(static_cast<double>(ones) / ks.size() - 0.5), 0.01);
}

TEST(Prng, HexKeys) {
  EXPECT_EQ(parse_hex_key("00000000000000ff"), 255u);
  EXPECT_EQ(parse_hex_key("0xFFFFFFFFFFFFFFFF"), ~0ULL);
  EXPECT_EQ(format_hex_key(0x0123456789abcdefULL), "0123456789abcdef");
  EXPECT_EQ(parse_hex_key(format_hex_key(0xdeadbeef12345678ULL)), 0xdeadbeef12345678ULL);
  EXPECT_THROW(parse_hex_key("123"), Error);
  EXPECT_THROW(parse_hex_key("000000000000000g"), Error);
}

TEST(Bits, FrameHeaderIsBigEndianBitCount) {
  const Bytes msg{0xA5, 0x01};
  const Bits f = frame_message(msg);
  ASSERT_EQ(f.size(), 48u);
  EXPECT_EQ(read_header(f), 16u);
  for (std::size_t i = 0; i < 27; ++i) EXPECT_EQ(f[i], 0);
  EXPECT_EQ(f[27], 1);  // 16 = 0b10000
  const Bits body(f.begin() + 32, f.begin() + 40);
  EXPECT_EQ(body, (Bits{1, 0, 1, 0, 0, 1, 0, 1}));
  EXPECT_EQ(unframe_message(f), msg);
}

TEST(Bits, EmptyMessageIsHeaderOnly) {
  const Bits f = frame_message({});
  EXPECT_EQ(f.size(), 32u);
  EXPECT_TRUE(unframe_message(f).empty());
}

TEST(Bits, TruncatedAndCorruptStreams) {
  Bits f = frame_message(Bytes{1, 2, 3});
  f.resize(40);
  try {
    unframe_message(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::truncated_stream);
  }
  Bits odd(32, 0);
  odd[31] = 1;  // length 1
  odd.push_back(1);
  try {
    unframe_message(odd);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::corrupt_stream);
  }
}
