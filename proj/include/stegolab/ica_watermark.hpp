#pragma once

// Watermarking in ICA coordinates: two-coset quantization (QIM) of one
// coefficient per image block, spread-spectrum / improved spread-spectrum
// embedding, and the ICA-based watermarked-only and known-original attacks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stegolab/bits.hpp"
#include "stegolab/error.hpp"
#include "stegolab/ica.hpp"
#include "stegolab/imageio.hpp"
#include "stegolab/prng.hpp"
#include "stegolab/sparse_coding.hpp"
#include "stegolab/steganalysis.hpp"

namespace stegolab::watermark {

using imageio::GrayImage;

// --- QIM ----------------------------------------------------------------------

inline void check_delta(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) fail(Errc::invalid_argument, "delta must be positive");
}

/// m = 0: delta*floor(x/delta); m = 1: the same plus delta/2.
inline double quantize_embed(double x, int m, double delta) {
  check_delta(delta);
  const double base = delta * std::floor(x / delta);
  return m ? base + delta / 2.0 : base;
}

/// Nearest coset: 0 when x mod delta is circularly closer to 0 than to
/// delta/2; exact ties read as 0.
inline int nn_detect(double x, double delta) {
  check_delta(delta);
  const double r = x - delta * std::floor(x / delta);
  const double d0 = std::min(std::abs(r), std::abs(delta - r));
  const double d1 = std::abs(r - delta / 2.0);
  return d0 <= d1 ? 0 : 1;
}

// --- ICA block basis ------------------------------------------------------------

/// The watermark key: a per-image ICA basis, the carrier coefficient index
/// and the quantization step.
struct IcaBasis {
  std::size_t block_side = 16;
  int index = 0;
  double delta = 0.0;
  Eigen::VectorXd mean;   // dim
  Eigen::MatrixXd unmix;  // ncomp x dim
  Eigen::MatrixXd mix;    // dim x ncomp

  Eigen::Index dim() const { return unmix.cols(); }
  Eigen::Index components() const { return unmix.rows(); }
};

struct BasisOptions {
  std::size_t block_side = 16;
  int n_components = 32;
  std::size_t train_stride = 8;  // overlapping training patches
  ica::Contrast contrast = ica::Contrast::gauss;
  int max_iter = 400;
  std::uint64_t seed = 0;
};

/// Patches of side `n` taken every `stride` pixels, stacked like to_blocks.
inline Eigen::MatrixXd training_patches(const GrayImage& img, std::size_t n, std::size_t stride) {
  if (n == 0 || stride == 0 || n > img.width || n > img.height)
    fail(Errc::invalid_argument, "patch size does not fit the image");
  const std::size_t px = (img.width - n) / stride + 1, py = (img.height - n) / stride + 1;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n * n), static_cast<Eigen::Index>(px * py));
  for (std::size_t j = 0; j < py; ++j)
    for (std::size_t i = 0; i < px; ++i)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t r = 0; r < n; ++r)
          out(static_cast<Eigen::Index>(c * n + r), static_cast<Eigen::Index>(j * px + i)) =
              img.at(i * stride + c, j * stride + r);
  return out;
}

/// Learns the basis on the cover's own patches. The carrier is the component
/// whose basis vector has the median energy.
inline IcaBasis learn_basis(const GrayImage& cover, const BasisOptions& opt = {}) {
  const Eigen::MatrixXd x = training_patches(cover, opt.block_side, opt.train_stride);
  ica::FastIcaOptions fo;
  fo.contrast = opt.contrast;
  fo.max_iter = opt.max_iter;
  fo.seed = opt.seed;
  const ica::IcaModel model = ica::fit(x, opt.n_components, true, fo);
  IcaBasis b;
  b.block_side = opt.block_side;
  b.mean = model.whitening.mean;
  b.unmix = model.unmix;
  b.mix = model.mix;
  std::vector<int> rank(static_cast<std::size_t>(b.components()));
  for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = static_cast<int>(i);
  std::sort(rank.begin(), rank.end(), [&](int a, int c) {
    const double ea = b.mix.col(a).squaredNorm(), ec = b.mix.col(c).squaredNorm();
    return ea != ec ? ea < ec : a < c;
  });
  b.index = rank[rank.size() / 2];
  return b;
}

/// Step whose expected per-pixel MSE (5 delta^2 / 24 spread over the block
/// through the carrier's basis vector) meets `target_psnr_db`.
inline double delta_for_psnr(const IcaBasis& b, double target_psnr_db) {
  const double mse = 255.0 * 255.0 / std::pow(10.0, target_psnr_db / 10.0);
  const double n2 = static_cast<double>(b.dim());
  return std::sqrt(24.0 / 5.0 * n2 * mse) / b.mix.col(b.index).norm();
}

struct QimEmbedResult {
  GrayImage stego;
  IcaBasis key;
  double psnr_db = 0.0;
  std::size_t capacity_bits = 0;
};

namespace detail {

inline GrayImage qim_apply(const GrayImage& cover, std::span<const std::uint8_t> bits, const IcaBasis& b) {
  imageio::BlockMatrix blocks = imageio::to_blocks(cover, b.block_side);
  const Eigen::RowVectorXd u = b.unmix.row(b.index);
  const Eigen::VectorXd a = b.mix.col(b.index);
  for (std::size_t j = 0; j < bits.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const double s = u.dot(blocks.data.col(col) - b.mean);
    const double s2 = quantize_embed(s, bits[j] & 1, b.delta);
    blocks.data.col(col) += a * (s2 - s);
  }
  return imageio::from_blocks(blocks);
}

}  // namespace detail

inline std::size_t qim_capacity(const GrayImage& img, std::size_t block_side) {
  return (img.width / block_side) * (img.height / block_side);
}

/// One bit per block (raster order) in the carrier coefficient. With
/// delta <= 0 the step is chosen for 42 dB and shrunk until PSNR >= 40 dB.
inline QimEmbedResult ica_block_watermark_embed(const GrayImage& cover, std::span<const std::uint8_t> bits,
                                                double delta = 0.0, const BasisOptions& opt = {}) {
  QimEmbedResult out;
  out.capacity_bits = qim_capacity(cover, opt.block_side);
  if (cover.width % opt.block_side != 0 || cover.height % opt.block_side != 0)
    fail(Errc::dimension_mismatch, "block side must divide both image dimensions");
  if (bits.size() > out.capacity_bits)
    throw Error(Errc::capacity_exceeded, "one bit per block; image has " + std::to_string(out.capacity_bits),
                out.capacity_bits);
  out.key = learn_basis(cover, opt);
  const bool automatic = !(delta > 0.0);
  out.key.delta = automatic ? delta_for_psnr(out.key, 42.0) : delta;
  out.stego = detail::qim_apply(cover, bits, out.key);
  out.psnr_db = analysis::psnr(cover, out.stego);
  for (int guard = 0; automatic && out.psnr_db < 40.0 && guard < 20; ++guard) {
    out.key.delta *= 0.8;
    out.stego = detail::qim_apply(cover, bits, out.key);
    out.psnr_db = analysis::psnr(cover, out.stego);
  }
  return out;
}

inline Bits ica_block_watermark_extract(const GrayImage& stego, const IcaBasis& key, std::size_t nbits) {
  const imageio::BlockMatrix blocks = imageio::to_blocks(stego, key.block_side);
  if (key.dim() != blocks.data.rows()) fail(Errc::dimension_mismatch, "basis does not match block side");
  if (nbits > static_cast<std::size_t>(blocks.data.cols()))
    throw Error(Errc::capacity_exceeded, "more bits than blocks", static_cast<std::size_t>(blocks.data.cols()));
  const Eigen::RowVectorXd u = key.unmix.row(key.index);
  Bits out(nbits);
  for (std::size_t j = 0; j < nbits; ++j)
    out[j] = static_cast<std::uint8_t>(nn_detect(u.dot(blocks.data.col(static_cast<Eigen::Index>(j)) - key.mean), key.delta));
  return out;
}

/// Framed message front end (32-bit length header, as the other methods).
inline QimEmbedResult qim_embed_message(const GrayImage& cover, std::span<const std::uint8_t> msg, double delta,
                                        const BasisOptions& opt = {}) {
  const Bits framed = frame_message(msg);
  return ica_block_watermark_embed(cover, framed, delta, opt);
}

inline Bytes qim_extract_message(const GrayImage& stego, const IcaBasis& key) {
  const std::size_t cap = qim_capacity(stego, key.block_side);
  const Bits head = ica_block_watermark_extract(stego, key, std::min(cap, kHeaderBits));
  const std::uint32_t len = read_header(head);
  if (len % 8 != 0 || len > cap - kHeaderBits) fail(Errc::corrupt_stream, "header length does not fit the image");
  return unframe_message(ica_block_watermark_extract(stego, key, kHeaderBits + len));
}

/// ICAB1: "ICAB1\n", ASCII "dim ncomp index block_side\n", then little-endian
/// doubles: delta, mean (dim), unmix (ncomp x dim, row-major), mix (dim x
/// ncomp, row-major).
inline std::vector<std::uint8_t> write_basis(const IcaBasis& b) {
  const std::string head = "ICAB1\n" + std::to_string(b.dim()) + " " + std::to_string(b.components()) + " " +
                           std::to_string(b.index) + " " + std::to_string(b.block_side) + "\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  sparse::detail::put_f64(out, b.delta);
  for (Eigen::Index i = 0; i < b.mean.size(); ++i) sparse::detail::put_f64(out, b.mean(i));
  for (Eigen::Index r = 0; r < b.unmix.rows(); ++r)
    for (Eigen::Index c = 0; c < b.unmix.cols(); ++c) sparse::detail::put_f64(out, b.unmix(r, c));
  for (Eigen::Index r = 0; r < b.mix.rows(); ++r)
    for (Eigen::Index c = 0; c < b.mix.cols(); ++c) sparse::detail::put_f64(out, b.mix(r, c));
  return out;
}

inline IcaBasis read_basis(std::span<const std::uint8_t> bytes) {
  sparse::detail::Reader rd(bytes);
  rd.expect("ICAB1\n");
  const auto dim = static_cast<Eigen::Index>(rd.ascii_uint(' '));
  const auto ncomp = static_cast<Eigen::Index>(rd.ascii_uint(' '));
  IcaBasis b;
  b.index = static_cast<int>(rd.ascii_uint(' '));
  b.block_side = rd.ascii_uint('\n');
  if (dim == 0 || ncomp == 0 || ncomp > dim || b.index >= ncomp ||
      static_cast<Eigen::Index>(b.block_side * b.block_side) != dim)
    fail(Errc::bad_header, "inconsistent basis header");
  b.delta = rd.f64();
  check_delta(b.delta);
  b.mean.resize(dim);
  b.unmix.resize(ncomp, dim);
  b.mix.resize(dim, ncomp);
  for (Eigen::Index i = 0; i < dim; ++i) b.mean(i) = rd.f64();
  for (Eigen::Index r = 0; r < ncomp; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) b.unmix(r, c) = rd.f64();
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < ncomp; ++c) b.mix(r, c) = rd.f64();
  if (!rd.at_end()) fail(Errc::bad_header, "trailing bytes after basis");
  return b;
}

// --- spread spectrum ------------------------------------------------------------

inline void check_carriers(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u, const Eigen::MatrixXd& b) {
  if (u.rows() != x.rows() || b.rows() != u.cols() || b.cols() != x.cols())
    fail(Errc::dimension_mismatch, "X, U, B shapes disagree");
  for (Eigen::Index i = 0; i < u.cols(); ++i)
    if (std::abs(u.col(i).norm() - 1.0) > 1e-9) fail(Errc::invalid_argument, "spreading vectors must be unit norm");
}

/// Y = X + alpha U B.
inline Eigen::MatrixXd ss_embed(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u, const Eigen::MatrixXd& b,
                                double alpha = 1.0) {
  check_carriers(x, u, b);
  return x + alpha * (u * b);
}

/// y = x + sum_i (alpha b_i - lambda <x, u_i>/||u_i||) u_i, column by column.
inline Eigen::MatrixXd iss_embed(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u, const Eigen::MatrixXd& b,
                                 double alpha, double lambda) {
  check_carriers(x, u, b);
  const Eigen::VectorXd norms = u.colwise().norm().transpose();
  const Eigen::MatrixXd z = u.transpose() * x;  // N_c x N_0 host projections
  Eigen::MatrixXd coeff = alpha * b;
  for (Eigen::Index i = 0; i < u.cols(); ++i) coeff.row(i) -= lambda * z.row(i) / norms(i);
  return x + u * coeff;
}

inline double wcr_db(const Eigen::MatrixXd& host, const Eigen::MatrixXd& watermark) {
  return 10.0 * std::log10(watermark.squaredNorm() / host.squaredNorm());
}

/// N_v x N_c matrix with orthonormal columns (QR of a keyed Gaussian draw).
inline Eigen::MatrixXd orthonormal_carriers(Eigen::Index nv, Eigen::Index nc, std::uint64_t seed) {
  if (nc < 1 || nc > nv) fail(Errc::invalid_argument, "need 1 <= N_c <= N_v");
  KeyedPrng prng(seed);
  Eigen::MatrixXd g(nv, nc);
  for (Eigen::Index j = 0; j < nc; ++j)
    for (Eigen::Index i = 0; i < nv; ++i) g(i, j) = prng.gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(nv, nc);
}

struct AttackResult {
  Eigen::MatrixXd carriers;  // N_v x n, unit columns, sign/permutation ambiguous
  Eigen::MatrixXd messages;  // n x N_0 (known-original attack only)
  bool converged = true;
};

namespace detail {

inline AttackResult ica_directions(const Eigen::MatrixXd& data, int n, ica::Contrast g, std::uint64_t seed) {
  ica::FastIcaOptions fo;
  fo.contrast = g;
  fo.seed = seed;
  fo.max_iter = 1000;
  const ica::IcaModel m = ica::fit(data, n, true, fo);
  AttackResult r;
  r.carriers = m.mix;
  for (Eigen::Index i = 0; i < r.carriers.cols(); ++i) r.carriers.col(i).normalize();
  r.converged = m.rotation.all_converged();
  return r;
}

}  // namespace detail

/// Watermarked-only attack: ICA on Y with the host as noise.
inline AttackResult woa_attack(const Eigen::MatrixXd& y, int n_carriers, ica::Contrast g = ica::Contrast::quartic,
                               std::uint64_t seed = 0) {
  if (y.cols() <= n_carriers) fail(Errc::invalid_argument, "need N_0 > n_carriers");
  return detail::ica_directions(y, n_carriers, g, seed);
}

/// Known-original attack: ICA on D = Y - X, then least-squares messages.
inline AttackResult koa_attack(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x, int n_carriers,
                               ica::Contrast g = ica::Contrast::quartic, std::uint64_t seed = 0) {
  if (y.rows() != x.rows() || y.cols() != x.cols()) fail(Errc::dimension_mismatch, "Y and X shapes differ");
  const Eigen::MatrixXd d = y - x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d);
  qr.setThreshold(1e-9);
  if (d.squaredNorm() == 0.0 || qr.rank() < n_carriers)
    fail(Errc::degenerate_covariance, "Y - X has rank below n_carriers");

  AttackResult r;
  if (n_carriers == 1) {
    // Rank-one data: every column is a multiple of the carrier.
    Eigen::Index best;
    d.colwise().squaredNorm().maxCoeff(&best);
    r.carriers = d.col(best).normalized();
  } else {
    r = detail::ica_directions(d, n_carriers, g, seed);
  }
  r.messages = r.carriers.colPivHouseholderQr().solve(d);
  return r;
}

}  // namespace stegolab::watermark
