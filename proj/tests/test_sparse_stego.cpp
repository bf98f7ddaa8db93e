#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "stegolab/sparse_stego.hpp"

using namespace stegolab;
using namespace stegolab::sparse;

namespace {

imageio::GrayImage texture(std::size_t w, std::size_t h, std::uint64_t seed) {
  imageio::GrayImage img(w, h);
  KeyedPrng p(seed);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double v = 128 + 60 * std::sin(0.3 * x + 0.1 * y) + 30 * std::cos(0.05 * x * y) + 10 * p.gaussian();
      img.at(x, y) = imageio::quantize_pixel(v);
    }
  return img;
}

Bytes random_bytes(std::size_t n, std::uint64_t seed) {
  KeyedPrng p(seed);
  Bytes b(n);
  for (auto& v : b) v = static_cast<std::uint8_t>(p.next());
  return b;
}

SparseStegoParams small_params(std::uint64_t seed) {
  SparseStegoParams p;
  p.block_side = 4;
  p.atom_count = 24;
  p.sparsity = 5;
  p.ksvd_iters = 3;
  p.seed = seed;
  return p;
}

}  // namespace

TEST(CoeffCodec, HandComputedExamples) {
  EXPECT_EQ(embed_bit_in_coeff(5.25, 0), 5.25);
  EXPECT_EQ(embed_bit_in_coeff(1.0, 1), 1.0002288818359375);
  EXPECT_EQ(embed_bit_in_coeff(-2.5, 1), -(2.5 + 15.0 / 65536.0));
}

TEST(CoeffCodec, RoundTripOnSampleCoefficients) {
  for (double c : {0.1, -0.1, 1.7, -1.7, 3.99, -3.99, 1e-9, -1e-9, 1234.5678})
    for (int b : {0, 1}) {
      const double e = embed_bit_in_coeff(c, b);
      EXPECT_EQ(extract_bit_from_coeff(e), b) << c;
      EXPECT_LT(std::abs(e - c), std::ldexp(1.0, 4 - 16));
      EXPECT_EQ(std::signbit(e), std::signbit(c));
      EXPECT_EQ(std::floor(std::abs(e)), std::floor(std::abs(c)));
      EXPECT_NE(e, 0.0);
    }
}

TEST(CoeffCodec, MajorityWithTieToZero) {
  // q low bits 1101 and 0110.
  EXPECT_EQ(extract_bit_from_coeff(3.0 + 13.0 / 65536.0), 1);
  EXPECT_EQ(extract_bit_from_coeff(3.0 + 6.0 / 65536.0), 0);
  EXPECT_EQ(extract_bit_from_coeff(3.0 + 7.0 / 65536.0), 1);
}

TEST(CoeffCodec, ZeroRejected) {
  EXPECT_THROW(embed_bit_in_coeff(0.0, 1), Error);
  EXPECT_THROW(extract_bit_from_coeff(0.0), Error);
}

TEST(CoeffCodec, RandomPerturbationBound) {
  KeyedPrng p(3);
  for (int i = 0; i < 20000; ++i) {
    const double c = (p.uniform() - 0.5) * std::pow(10.0, p.uniform() * 6 - 3);
    if (c == 0.0) continue;
    const int b = p.bit();
    const double e = embed_bit_in_coeff(c, b);
    ASSERT_EQ(extract_bit_from_coeff(e), b);
    ASSERT_LT(std::abs(e - c), std::ldexp(1.0, -12));
  }
}

TEST(Capacity, Formulae) {
  EXPECT_EQ(capacity(8, 31, 1024).exact, 31744u);
  EXPECT_EQ(capacity(8, 31, 1024).theoretical, 32768u);
  EXPECT_EQ(capacity(8, 0, 1).exact, 0u);
}

TEST(Params, UniquenessBound) {
  SparseStegoParams p;
  p.sparsity = 32;
  EXPECT_THROW(p.validate(), Error);
  p.sparsity = 31;
  EXPECT_NO_THROW(p.validate());
  p.embed_bits = 17;
  EXPECT_THROW(p.validate(), Error);
}

TEST(SparseStego, OracleRoundTripRandomMessages) {
  const auto cover = texture(32, 32, 1);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const SparseStegoParams p = small_params(s);
    const std::size_t cap = 64 * 5;
    const Bytes msg = random_bytes((s * 7) % ((cap - 32) / 8), 100 + s);
    const auto res = sparse_embed(cover, msg, p);
    EXPECT_EQ(sparse_extract(res.stego, res.key, p, &res.modified_code), msg);
    EXPECT_LE(res.report.nnz, res.report.capacity_bits);
  }
}

TEST(SparseStego, CoefficientDriftBounded) {
  const auto cover = texture(32, 32, 2);
  const SparseStegoParams p = small_params(4);
  const auto res = sparse_embed(cover, random_bytes(30, 5), p);
  const KsvdResult ref = ksvd(imageio::to_blocks(cover, 4).data, p.atom_count, p.sparsity, p.ksvd_iters, p.seed);
  EXPECT_EQ(ref.dict.atoms, res.key.atoms);
  EXPECT_LT((ref.code.coeffs - res.modified_code.coeffs).cwiseAbs().maxCoeff(), std::ldexp(1.0, -12));
}

TEST(SparseStego, EmptyMessageEmbedsHeaderOnly) {
  const auto cover = texture(32, 32, 3);
  const SparseStegoParams p = small_params(6);
  const auto res = sparse_embed(cover, {}, p);
  EXPECT_EQ(res.report.used_bits, 32u);
  EXPECT_TRUE(sparse_extract(res.stego, res.key, p, &res.modified_code).empty());
}

TEST(SparseStego, CapacityExceededReportsCapacity) {
  const auto cover = texture(32, 32, 4);
  const SparseStegoParams p = small_params(7);
  try {
    sparse_embed(cover, random_bytes(200, 8), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::capacity_exceeded);
    ASSERT_TRUE(e.capacity().has_value());
    EXPECT_LE(*e.capacity(), 64u * 5u);
  }
}

TEST(SparseStego, Deterministic) {
  const auto cover = texture(32, 32, 5);
  const SparseStegoParams p = small_params(9);
  const Bytes msg = random_bytes(10, 10);
  const auto a = sparse_embed(cover, msg, p), b = sparse_embed(cover, msg, p);
  EXPECT_EQ(a.stego, b.stego);
  EXPECT_EQ(write_dictionary(a.key), write_dictionary(b.key));
}

TEST(SparseStego, KeyShapeChecked) {
  const auto cover = texture(32, 32, 6);
  const SparseStegoParams p = small_params(11);
  const auto res = sparse_embed(cover, random_bytes(4, 12), p);
  SparseStegoParams q = p;
  q.block_side = 8;
  q.sparsity = 5;
  EXPECT_THROW(sparse_extract(res.stego, res.key, q), Error);
}

TEST(SparseStego, BlindModeRunsAndReportsBer) {
  const auto cover = texture(32, 32, 7);
  const SparseStegoParams p = small_params(13);
  const Bytes msg = random_bytes(20, 14);
  const auto res = sparse_embed(cover, msg, p);
  const Bits raw = sparse_carrier_bits(res.stego, res.key, p);
  const double b = framed_ber(raw, msg);
  EXPECT_GE(b, 0.0);
  EXPECT_LE(b, 1.0);
}

TEST(SparseStego, ChiSquareDoesNotFlagNaturalCover) {
  // Plain LSB at full capacity is flagged; sparse stego keeps the cover's
  // unequalized pairs.
  const auto cover = imageio::load_pgm(std::string(STEGOLAB_CORPUS_DIR) + "/camera.pgm");
  SparseStegoParams p;
  p.seed = 1;
  const auto res = sparse_embed(cover, random_bytes(3800, 17), p);
  EXPECT_LT(analysis::chi_square_attack(res.stego).p_value, 0.95);
  const auto lsb_full = [&] {
    imageio::GrayImage out = cover;
    const Bits ks = keystream_bits(3, cover.size());
    for (std::size_t i = 0; i < ks.size(); ++i) out.pixels[i] = static_cast<std::uint8_t>((out.pixels[i] & 0xFE) | ks[i]);
    return out;
  }();
  EXPECT_GT(analysis::chi_square_attack(lsb_full).p_value, 0.95);
}
