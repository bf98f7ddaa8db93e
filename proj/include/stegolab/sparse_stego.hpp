#pragma once

// Message embedding in the low fractional bits of nonzero sparse
// coefficients. The learned dictionary is the key.

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "stegolab/bits.hpp"
#include "stegolab/error.hpp"
#include "stegolab/imageio.hpp"
#include "stegolab/sparse_coding.hpp"
#include "stegolab/steganalysis.hpp"

namespace stegolab::sparse {

struct SparseStegoParams {
  std::size_t block_side = 8;
  int atom_count = 129;
  int sparsity = 31;
  int ksvd_iters = 10;
  int frac_bits = 16;
  int embed_bits = 4;
  std::uint64_t seed = 0;

  void validate() const {
    const auto n2 = static_cast<long>(block_side * block_side);
    if (block_side == 0) fail(Errc::invalid_argument, "block side must be positive");
    if (atom_count < 1) fail(Errc::invalid_argument, "atom count must be positive");
    if (sparsity < 1 || 2L * sparsity >= n2) fail(Errc::invalid_argument, "sparsity must satisfy 1 <= t0 < n^2/2");
    if (frac_bits < 1 || frac_bits > 40) fail(Errc::invalid_argument, "frac_bits must be in 1..40");
    if (embed_bits < 1 || embed_bits > frac_bits) fail(Errc::invalid_argument, "embed_bits must be in 1..frac_bits");
    if (ksvd_iters < 0) fail(Errc::invalid_argument, "ksvd_iters must be >= 0");
  }
};

namespace detail {

inline std::uint64_t frac_code(double m, int frac_bits) {
  const double f = m - std::floor(m);
  const std::uint64_t scale = std::uint64_t{1} << frac_bits;
  return std::min(static_cast<std::uint64_t>(std::floor(f * static_cast<double>(scale))), scale - 1);
}

}  // namespace detail

/// Writes `bit` into all `embed_bits` low bits of the B-bit fixed-point
/// fraction of |c|. Sign and integer part are kept. A coefficient below 1
/// whose fraction would become 0 is bumped to q = 2^embed_bits so it stays
/// nonzero (and therefore stays in the carrier enumeration).
inline double embed_bit_in_coeff(double c, int bit, int frac_bits = 16, int embed_bits = 4) {
  if (c == 0.0 || !std::isfinite(c)) fail(Errc::zero_coefficient, "payload needs a nonzero coefficient");
  const double m = std::abs(c);
  const double ip = std::floor(m);
  const std::uint64_t mask = (std::uint64_t{1} << embed_bits) - 1;
  std::uint64_t q = detail::frac_code(m, frac_bits);
  q = (q & ~mask) | (bit ? mask : 0);
  if (ip == 0.0 && q == 0) q = mask + 1;
  const double out = ip + std::ldexp(static_cast<double>(q), -frac_bits);
  return c < 0 ? -out : out;
}

/// Majority vote over the low bits; an exact tie reads as 0.
inline int extract_bit_from_coeff(double c, int frac_bits = 16, int embed_bits = 4) {
  if (c == 0.0 || !std::isfinite(c)) fail(Errc::zero_coefficient, "payload needs a nonzero coefficient");
  const std::uint64_t mask = (std::uint64_t{1} << embed_bits) - 1;
  const int ones = std::popcount(detail::frac_code(std::abs(c), frac_bits) & mask);
  return 2 * ones > embed_bits ? 1 : 0;
}

struct Capacity {
  std::size_t exact = 0;        // J * t0
  std::size_t theoretical = 0;  // J * n^2 / 2
};

inline Capacity capacity(std::size_t block_side, std::size_t t0, std::size_t blocks) {
  return {blocks * t0, blocks * block_side * block_side / 2};
}

inline Capacity capacity(const SparseStegoParams& p, std::size_t blocks) {
  return capacity(p.block_side, static_cast<std::size_t>(p.sparsity), blocks);
}

struct SparseEmbedReport {
  std::size_t capacity_bits = 0;  // ceiling J * t0
  std::size_t theoretical_bits = 0;
  std::size_t nnz = 0;            // realized carriers
  std::size_t used_bits = 0;
  double psnr_db = 0.0;
  double ksvd_objective = 0.0;
};

struct SparseEmbedResult {
  imageio::GrayImage stego;
  Dictionary key;
  SparseCode modified_code;  // validation artifact for oracle extraction
  SparseEmbedReport report;
};

/// Calls fn(row, col) for every nonzero, column-major with ascending rows.
template <class Fn>
void for_each_carrier(const SparseCode& code, Fn&& fn) {
  for (std::size_t c = 0; c < code.support.size(); ++c)
    for (int r : code.support[c]) fn(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

inline SparseEmbedResult sparse_embed(const imageio::GrayImage& cover, std::span<const std::uint8_t> msg,
                                      const SparseStegoParams& p) {
  p.validate();
  const imageio::BlockMatrix blocks = imageio::to_blocks(cover, p.block_side);
  const Bits framed = frame_message(msg);

  KsvdResult learned = ksvd(blocks.data, p.atom_count, p.sparsity, p.ksvd_iters, p.seed);
  SparseEmbedResult out;
  out.key = std::move(learned.dict);
  out.modified_code = std::move(learned.code);
  SparseCode& code = out.modified_code;

  const Capacity cap = capacity(p, static_cast<std::size_t>(blocks.data.cols()));
  out.report.capacity_bits = cap.exact;
  out.report.theoretical_bits = cap.theoretical;
  out.report.nnz = code.nnz();
  out.report.ksvd_objective = learned.objective();
  if (framed.size() > out.report.nnz)
    throw Error(Errc::capacity_exceeded,
                "framed message needs " + std::to_string(framed.size()) + " bits, capacity is " +
                    std::to_string(out.report.nnz),
                out.report.nnz);

  std::size_t k = 0;
  for_each_carrier(code, [&](Eigen::Index r, Eigen::Index c) {
    if (k < framed.size()) {
      code.coeffs(r, c) = embed_bit_in_coeff(code.coeffs(r, c), framed[k], p.frac_bits, p.embed_bits);
      ++k;
    }
  });
  out.report.used_bits = framed.size();

  imageio::BlockMatrix rebuilt = blocks;
  rebuilt.data = reconstruct(out.key, code);
  out.stego = imageio::from_blocks(rebuilt);
  out.report.psnr_db = analysis::psnr(cover, out.stego);
  return out;
}

/// Raw carrier bits of a stego image: OMP re-estimation (blind), or the
/// stored modified code when supplied (validation mode).
inline Bits sparse_carrier_bits(const imageio::GrayImage& stego, const Dictionary& key,
                                const SparseStegoParams& p, const SparseCode* oracle_code = nullptr) {
  p.validate();
  if (key.atom_dim() != static_cast<Eigen::Index>(p.block_side * p.block_side))
    fail(Errc::dimension_mismatch, "key atom dimension does not match block side");
  const imageio::BlockMatrix blocks = imageio::to_blocks(stego, p.block_side);
  SparseCode blind;
  const SparseCode* code = oracle_code;
  if (code != nullptr) {
    if (code->coeffs.rows() != key.atom_count() || code->coeffs.cols() != blocks.data.cols())
      fail(Errc::dimension_mismatch, "oracle code shape does not match key and image");
  } else {
    blind = omp_batch(key, blocks.data, p.sparsity);
    code = &blind;
  }
  Bits bits;
  bits.reserve(code->nnz());
  for_each_carrier(*code, [&](Eigen::Index r, Eigen::Index c) {
    bits.push_back(static_cast<std::uint8_t>(extract_bit_from_coeff(code->coeffs(r, c), p.frac_bits, p.embed_bits)));
  });
  return bits;
}

inline Bytes sparse_extract(const imageio::GrayImage& stego, const Dictionary& key, const SparseStegoParams& p,
                            const SparseCode* oracle_code = nullptr) {
  return unframe_message(sparse_carrier_bits(stego, key, p, oracle_code));
}

/// Bit error rate of the carrier stream against the framed message; missing
/// carriers count as errors.
inline double framed_ber(std::span<const std::uint8_t> carrier_bits, std::span<const std::uint8_t> msg) {
  const Bits framed = frame_message(msg);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < framed.size(); ++i)
    errors += i >= carrier_bits.size() || carrier_bits[i] != framed[i];
  return framed.empty() ? 0.0 : static_cast<double>(errors) / static_cast<double>(framed.size());
}

}  // namespace stegolab::sparse
