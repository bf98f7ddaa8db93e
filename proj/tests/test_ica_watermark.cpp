#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "stegolab/ica_watermark.hpp"

using namespace stegolab;
using namespace stegolab::watermark;

namespace {

GrayImage corpus(const std::string& name) { return imageio::load_pgm(std::string(STEGOLAB_CORPUS_DIR) + "/" + name); }

Bits random_bits(std::size_t n, std::uint64_t seed) {
  KeyedPrng p(seed);
  Bits b(n);
  for (auto& v : b) v = p.bit();
  return b;
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  KeyedPrng p(seed);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = p.gaussian();
  return m;
}

Eigen::MatrixXd sign_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  KeyedPrng p(seed);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = p.bit() ? 1.0 : -1.0;
  return m;
}

}  // namespace

TEST(Qim, Examples) {
  EXPECT_DOUBLE_EQ(quantize_embed(7.3, 0, 2.0), 6.0);
  EXPECT_DOUBLE_EQ(quantize_embed(7.3, 1, 2.0), 7.0);
  EXPECT_DOUBLE_EQ(quantize_embed(-0.1, 0, 2.0), -2.0);
  EXPECT_EQ(nn_detect(0.5, 2.0), 0);  // delta/4 tie
  EXPECT_EQ(nn_detect(1.5, 2.0), 0);  // 3 delta/4 tie
  EXPECT_EQ(nn_detect(1.0, 2.0), 1);
  EXPECT_THROW(quantize_embed(1.0, 0, 0.0), Error);
  EXPECT_THROW(nn_detect(1.0, -1.0), Error);
}

TEST(Qim, DetectionRegionsOnGrid) {
  KeyedPrng p(11);
  for (int i = 0; i < 10000; ++i) {
    const double delta = 0.5 + 4.0 * p.uniform();
    const double x = (p.uniform() - 0.5) * 200.0;
    const int m = p.bit();
    const double q = quantize_embed(x, m, delta);
    EXPECT_EQ(nn_detect(q, delta), m);
    const double noise = (p.uniform() * 2.0 - 1.0) * 0.249 * delta;
    EXPECT_EQ(nn_detect(q + noise, delta), m);
    // embedding moves the value by less than one step
    EXPECT_LT(std::abs(q - x), delta);
  }
}

TEST(BlockWatermark, RoundTripOnCorpus) {
  const GrayImage cover = corpus("camera.pgm");
  const std::size_t cap = qim_capacity(cover, 16);
  ASSERT_EQ(cap, 256u);
  const Bits bits = random_bits(cap, 5);
  const QimEmbedResult r = ica_block_watermark_embed(cover, bits);
  EXPECT_GE(r.psnr_db, 40.0);
  const Bits got = ica_block_watermark_extract(r.stego, r.key, bits.size());
  EXPECT_LT(analysis::ber(bits, got), 0.05);
}

TEST(BlockWatermark, ZeroBitsLeavesCover) {
  const GrayImage cover = corpus("coins.pgm");
  const QimEmbedResult r = ica_block_watermark_embed(cover, Bits{});
  for (std::size_t i = 0; i < cover.pixels.size(); ++i)
    EXPECT_LE(std::abs(int(cover.pixels[i]) - int(r.stego.pixels[i])), 1);
}

TEST(BlockWatermark, FramedMessageAndKeyFile) {
  const GrayImage cover = corpus("moon.pgm");
  const Bytes msg{'w', 'a', 't', 'e', 'r'};
  const QimEmbedResult r = qim_embed_message(cover, msg, 0.0);
  const IcaBasis key = read_basis(write_basis(r.key));
  EXPECT_EQ(key.index, r.key.index);
  EXPECT_EQ(key.block_side, r.key.block_side);
  EXPECT_EQ(key.delta, r.key.delta);
  EXPECT_EQ(key.unmix, r.key.unmix);
  EXPECT_EQ(key.mix, r.key.mix);
  EXPECT_EQ(key.mean, r.key.mean);
  EXPECT_EQ(qim_extract_message(r.stego, key), msg);
}

TEST(BlockWatermark, CapacityAndShapeErrors) {
  const GrayImage cover = corpus("camera.pgm");
  try {
    ica_block_watermark_embed(cover, Bits(257, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::capacity_exceeded);
    EXPECT_EQ(e.capacity(), std::optional<std::size_t>(256));
  }
  EXPECT_THROW(ica_block_watermark_embed(GrayImage(40, 32, 0), Bits{1}), Error);
  std::vector<std::uint8_t> junk{'I', 'C', 'A', 'B', '2', '\n'};
  EXPECT_THROW(read_basis(junk), Error);
}

TEST(BlockWatermark, DeltaMatchesPsnrTarget) {
  IcaBasis b;
  b.mix = Eigen::MatrixXd::Zero(256, 2);
  b.unmix = Eigen::MatrixXd::Zero(2, 256);
  b.mix(0, 1) = 2.0;
  b.index = 1;
  // MSE = 5 delta^2 |a|^2 / (24 n^2)
  const double d = delta_for_psnr(b, 42.0);
  const double mse = 5.0 * d * d * 4.0 / (24.0 * 256.0);
  EXPECT_NEAR(10.0 * std::log10(255.0 * 255.0 / mse), 42.0, 1e-9);
}

TEST(SpreadSpectrum, SingleCarrierIdentity) {
  const Eigen::MatrixXd x = gaussian_matrix(16, 1, 1);
  const Eigen::MatrixXd u = orthonormal_carriers(16, 1, 2);
  const Eigen::MatrixXd y = ss_embed(x, u, Eigen::MatrixXd::Ones(1, 1));
  EXPECT_LT((y - x - u).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SpreadSpectrum, IssReductionsAndCancellation) {
  const Eigen::MatrixXd x = gaussian_matrix(64, 30, 3);
  const Eigen::MatrixXd u = orthonormal_carriers(64, 3, 4);
  const Eigen::MatrixXd b = sign_matrix(3, 30, 5);
  EXPECT_LT((iss_embed(x, u, b, 1.0, 0.0) - ss_embed(x, u, b)).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd y = iss_embed(x, u, b, 0.7, 1.0);
  EXPECT_LT((u.transpose() * y - 0.7 * b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SpreadSpectrum, DistortionAndWcr) {
  const Eigen::Index nv = 512, n0 = 1000, nc = 2;
  const Eigen::MatrixXd x = gaussian_matrix(nv, n0, 6);
  const Eigen::MatrixXd u = orthonormal_carriers(nv, nc, 7);
  EXPECT_LT((u.transpose() * u - Eigen::MatrixXd::Identity(nc, nc)).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd b = sign_matrix(nc, n0, 8);
  const double alpha = std::sqrt(static_cast<double>(nv) * std::pow(10.0, -2.1) / static_cast<double>(nc));
  const Eigen::MatrixXd y = ss_embed(x, u, b, alpha);
  // orthonormal carriers: ||Y - X||^2 = N_0 N_c alpha^2
  EXPECT_NEAR((y - x).squaredNorm(), static_cast<double>(n0 * nc) * alpha * alpha, 1e-6);
  EXPECT_NEAR(wcr_db(x, y - x), -21.0, 0.1);
  // host interference is removed along the carriers, so ISS distorts less
  const Eigen::MatrixXd yi = iss_embed(x, u, b, alpha, 0.5);
  const double var_ss = (u.transpose() * y).array().square().mean();
  const double var_iss = (u.transpose() * yi).array().square().mean();
  EXPECT_LT(var_iss, var_ss);
  EXPECT_THROW(ss_embed(x, 2.0 * u, b), Error);
  EXPECT_THROW(ss_embed(x, u, sign_matrix(3, n0, 1)), Error);
}

TEST(Attacks, WatermarkedOnlyNoiselessSingleCarrier) {
  const Eigen::MatrixXd u = orthonormal_carriers(32, 1, 9);
  const Eigen::MatrixXd y = ss_embed(Eigen::MatrixXd::Zero(32, 200), u, sign_matrix(1, 200, 10));
  const AttackResult r = woa_attack(y, 1);
  EXPECT_NEAR(std::abs(ica::normalized_correlation(r.carriers.col(0), u.col(0))), 1.0, 1e-6);
  EXPECT_LT((r.carriers.col(0).cwiseAbs() - u.col(0).cwiseAbs()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Attacks, KnownOriginalRecoversCarriersAndMessages) {
  const Eigen::Index nv = 128, n0 = 500;
  const Eigen::MatrixXd x = gaussian_matrix(nv, n0, 11);
  const Eigen::MatrixXd u = orthonormal_carriers(nv, 2, 12);
  const Eigen::MatrixXd b = sign_matrix(2, n0, 13);
  const AttackResult r = koa_attack(ss_embed(x, u, b, 0.5), x, 2);
  for (double c : ica::best_abs_correlations(u, r.carriers)) EXPECT_GE(c, 0.999);
  // recovered messages match B up to sign and order after normalization
  for (Eigen::Index i = 0; i < 2; ++i) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < 2; ++j) {
      const Eigen::VectorXd est = r.messages.row(j).transpose();
      best = std::max(best, std::abs(ica::normalized_correlation(est, b.row(i).transpose())));
    }
    EXPECT_GE(best, 0.999);
  }
}

TEST(Attacks, KnownOriginalSingleCarrierAndRank) {
  const Eigen::MatrixXd x = gaussian_matrix(40, 60, 14);
  const Eigen::MatrixXd u = orthonormal_carriers(40, 1, 15);
  const Eigen::MatrixXd b = sign_matrix(1, 60, 16);
  const AttackResult r = koa_attack(ss_embed(x, u, b, 2.0), x, 1);
  EXPECT_NEAR(std::abs(r.carriers.col(0).dot(u.col(0))), 1.0, 1e-12);
  const double s = r.carriers.col(0).dot(u.col(0)) > 0 ? 1.0 : -1.0;
  EXPECT_LT((s * r.messages - 2.0 * b).cwiseAbs().maxCoeff(), 1e-9);
  // D has rank one, two carriers cannot be recovered
  EXPECT_THROW(koa_attack(ss_embed(x, u, b, 2.0), x, 2), Error);
  EXPECT_THROW(koa_attack(x, x, 1), Error);
}

TEST(Correlation, OrthogonalIsZero) {
  const Eigen::MatrixXd u = orthonormal_carriers(10, 2, 17);
  EXPECT_NEAR(ica::normalized_correlation(u.col(0), u.col(1)), 0.0, 1e-12);
}
