#pragma once

// 8-bit grayscale rasters, binary PGM codec, and the block-column matrix form
// used by the sparse and ICA pipelines.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "stegolab/error.hpp"

namespace stegolab::imageio {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(w * h, fill) {
    if (w == 0 || h == 0) fail(Errc::invalid_argument, "image dimensions must be positive");
  }
  GrayImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px)
      : width(w), height(h), pixels(std::move(px)) {
    if (w == 0 || h == 0) fail(Errc::invalid_argument, "image dimensions must be positive");
    if (pixels.size() != w * h) fail(Errc::dimension_mismatch, "pixel count != width*height");
  }

  std::size_t size() const noexcept { return pixels.size(); }
  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Column block matrix: column j is block j (raster order), each block
/// stacked column by column.
struct BlockMatrix {
  Eigen::MatrixXd data;
  std::size_t block_side = 0;
  std::size_t image_width = 0;
  std::size_t image_height = 0;

  std::size_t blocks_x() const noexcept { return image_width / block_side; }
  std::size_t blocks_y() const noexcept { return image_height / block_side; }
};

namespace detail {

class PgmCursor {
 public:
  explicit PgmCursor(std::span<const std::uint8_t> b) : bytes_(b) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = static_cast<char>(bytes_[pos_]);
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::size_t read_uint() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) fail(Errc::bad_header, "unexpected end of header");
    std::size_t v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_] - '0');
      if (++digits > 9) fail(Errc::bad_header, "header number too large");
      ++pos_;
    }
    if (digits == 0) fail(Errc::bad_header, "expected a number in header");
    return v;
  }

  std::size_t& position() { return pos_; }
  std::span<const std::uint8_t> bytes() const { return bytes_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline GrayImage read_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    fail(Errc::bad_magic, "not a binary PGM (expected P5)");
  detail::PgmCursor cur(bytes.subspan(2));
  const std::size_t w = cur.read_uint();
  const std::size_t h = cur.read_uint();
  const std::size_t maxval = cur.read_uint();
  if (w == 0 || h == 0) fail(Errc::bad_header, "zero image dimension");
  if (maxval == 0 || maxval > 255) fail(Errc::bad_maxval, "maxval must be in 1..255");
  // Exactly one whitespace byte separates the header from the raster.
  std::size_t& p = cur.position();
  if (p >= cur.bytes().size()) fail(Errc::truncated_data, "missing raster");
  ++p;
  const auto raster = cur.bytes().subspan(p);
  if (raster.size() < w * h) fail(Errc::truncated_data, "pixel data shorter than width*height");
  std::vector<std::uint8_t> px(raster.begin(), raster.begin() + static_cast<std::ptrdiff_t>(w * h));
  for (auto v : px)
    if (v > maxval) fail(Errc::bad_maxval, "pixel exceeds maxval");
  return GrayImage(w, h, std::move(px));
}

inline std::vector<std::uint8_t> write_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io, "write failed for " + path.string());
}

inline GrayImage load_pgm(const std::filesystem::path& path) { return read_pgm(read_file(path)); }

inline void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
  write_file(path, write_pgm(img));
}

inline BlockMatrix to_blocks(const GrayImage& img, std::size_t n) {
  if (n == 0) fail(Errc::invalid_argument, "block side must be positive");
  if (img.width % n != 0 || img.height % n != 0)
    fail(Errc::dimension_mismatch, "block side must divide both image dimensions");
  BlockMatrix m;
  m.block_side = n;
  m.image_width = img.width;
  m.image_height = img.height;
  const std::size_t bx = img.width / n, by = img.height / n;
  m.data.resize(static_cast<Eigen::Index>(n * n), static_cast<Eigen::Index>(bx * by));
  for (std::size_t j = 0; j < by; ++j)
    for (std::size_t i = 0; i < bx; ++i) {
      const auto col = static_cast<Eigen::Index>(j * bx + i);
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t r = 0; r < n; ++r)
          m.data(static_cast<Eigen::Index>(c * n + r), col) = img.at(i * n + c, j * n + r);
    }
  return m;
}

/// Round half away from zero, then clamp to [0, 255].
inline std::uint8_t quantize_pixel(double v) {
  const double r = std::round(v);
  if (!(r > 0.0)) return 0;  // also maps NaN to 0
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

inline GrayImage from_blocks(const BlockMatrix& m) {
  const std::size_t n = m.block_side;
  if (n == 0 || m.image_width == 0 || m.image_height == 0 || m.image_width % n != 0 ||
      m.image_height % n != 0)
    fail(Errc::dimension_mismatch, "block matrix carries inconsistent image dimensions");
  const std::size_t bx = m.blocks_x(), by = m.blocks_y();
  if (static_cast<std::size_t>(m.data.rows()) != n * n ||
      static_cast<std::size_t>(m.data.cols()) != bx * by)
    fail(Errc::dimension_mismatch, "block matrix shape does not match image dimensions");
  GrayImage img(m.image_width, m.image_height);
  for (std::size_t j = 0; j < by; ++j)
    for (std::size_t i = 0; i < bx; ++i) {
      const auto col = static_cast<Eigen::Index>(j * bx + i);
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t r = 0; r < n; ++r)
          img.at(i * n + c, j * n + r) =
              quantize_pixel(m.data(static_cast<Eigen::Index>(c * n + r), col));
    }
  return img;
}

}  // namespace stegolab::imageio
