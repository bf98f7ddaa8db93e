#include <gtest/gtest.h>

#include <string>

#include "stegolab/imageio.hpp"
#include "stegolab/prng.hpp"

using namespace stegolab;
using namespace stegolab::imageio;

namespace {

std::vector<std::uint8_t> bytes(const std::string& s) { return {s.begin(), s.end()}; }

Errc code_of(const std::vector<std::uint8_t>& b) {
  try {
    read_pgm(b);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::io;  // sentinel: no error
}

GrayImage random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  GrayImage img(w, h);
  KeyedPrng prng(seed);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(prng.below(256));
  return img;
}

}  // namespace

TEST(Pgm, ParsesHeaderWithComments) {
  auto b = bytes("P5\n# made by hand\n2 # width\n1\n255\n");
  b.push_back(7);
  b.push_back(200);
  const GrayImage img = read_pgm(b);
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.height, 1u);
  EXPECT_EQ(img.at(0, 0), 7);
  EXPECT_EQ(img.at(1, 0), 200);
}

TEST(Pgm, SmallMaxvalKeepsValues) {
  auto b = bytes("P5 3 1 15\n");
  b.insert(b.end(), {0, 9, 15});
  const GrayImage img = read_pgm(b);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0, 9, 15}));
}

TEST(Pgm, RoundTripIsByteExact) {
  const GrayImage img = random_image(17, 5, 3);
  const auto enc = write_pgm(img);
  EXPECT_EQ(read_pgm(enc), img);
  EXPECT_EQ(write_pgm(read_pgm(enc)), enc);
  const std::string head(enc.begin(), enc.begin() + 12);
  EXPECT_EQ(head, "P5\n17 5\n255\n");
}

TEST(Pgm, DistinctErrors) {
  EXPECT_EQ(code_of(bytes("P2\n1 1\n255\n0")), Errc::bad_magic);
  EXPECT_EQ(code_of(bytes("P5\n1 1\n65535\n00")), Errc::bad_maxval);
  EXPECT_EQ(code_of(bytes("P5\n1 1\n0\n0")), Errc::bad_maxval);
  EXPECT_EQ(code_of(bytes("P5\nx 1\n255\n0")), Errc::bad_header);
  EXPECT_EQ(code_of(bytes("P5\n4 4\n255\n0123")), Errc::truncated_data);
  EXPECT_EQ(code_of(bytes("P5\n2 2\n255")), Errc::truncated_data);
  EXPECT_EQ(code_of(bytes("")), Errc::bad_magic);
}

TEST(Pgm, PixelAboveMaxvalRejected) {
  auto b = bytes("P5 1 1 10\n");
  b.push_back(11);
  EXPECT_EQ(code_of(b), Errc::bad_maxval);
}

TEST(Blocks, TwoByTwoStacksColumnwise) {
  GrayImage img(2, 2, std::vector<std::uint8_t>{1, 2, 3, 4});
  const BlockMatrix m = to_blocks(img, 2);
  ASSERT_EQ(m.data.rows(), 4);
  ASSERT_EQ(m.data.cols(), 1);
  EXPECT_EQ(m.data(0, 0), 1);
  EXPECT_EQ(m.data(1, 0), 3);
  EXPECT_EQ(m.data(2, 0), 2);
  EXPECT_EQ(m.data(3, 0), 4);
}

TEST(Blocks, RasterOrderOfBlocks) {
  GrayImage img(4, 2);
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 4; ++x) img.at(x, y) = static_cast<std::uint8_t>(10 * y + x);
  const BlockMatrix m = to_blocks(img, 2);
  ASSERT_EQ(m.data.cols(), 2);
  EXPECT_EQ(m.data(0, 1), 2);   // top-left of the right block
  EXPECT_EQ(m.data(3, 1), 13);  // bottom-right
}

TEST(Blocks, RoundTripIdentity) {
  for (std::size_t n : {1u, 2u, 4u, 8u}) {
    const GrayImage img = random_image(16, 8, n);
    EXPECT_EQ(from_blocks(to_blocks(img, n)), img);
  }
}

TEST(Blocks, NonDivisibleSizeRejected) {
  const GrayImage img(10, 8);
  try {
    to_blocks(img, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
}

TEST(Blocks, QuantizationRoundsAndClamps) {
  EXPECT_EQ(quantize_pixel(-3.2), 0);
  EXPECT_EQ(quantize_pixel(254.5), 255);
  EXPECT_EQ(quantize_pixel(300.0), 255);
  EXPECT_EQ(quantize_pixel(2.5), 3);
  EXPECT_EQ(quantize_pixel(2.49), 2);
  BlockMatrix m;
  m.block_side = 1;
  m.image_width = 2;
  m.image_height = 1;
  m.data.resize(1, 2);
  m.data << -1.0, 1e9;
  const GrayImage img = from_blocks(m);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0, 255}));
}

TEST(Blocks, ShapeMismatchRejected) {
  BlockMatrix m;
  m.block_side = 2;
  m.image_width = 4;
  m.image_height = 4;
  m.data.resize(4, 3);
  EXPECT_THROW(from_blocks(m), Error);
}
