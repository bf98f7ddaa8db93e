#pragma once

// FastICA: centering + PCA whitening, negentropy approximations, and the
// one-unit fixed-point iteration run either by deflation (Gram-Schmidt) or
// symmetrically with (W W^T)^{-1/2} decorrelation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "stegolab/error.hpp"
#include "stegolab/prng.hpp"

namespace stegolab::ica {

enum class Contrast { quartic, gauss };

inline Contrast parse_contrast(std::string_view s) {
  if (s == "quartic" || s == "pow3") return Contrast::quartic;
  if (s == "gauss") return Contrast::gauss;
  fail(Errc::invalid_argument, "unknown contrast " + std::string(s));
}

inline const char* contrast_name(Contrast g) { return g == Contrast::quartic ? "quartic" : "gauss"; }

struct WhiteningModel {
  Eigen::VectorXd mean;        // m
  Eigen::MatrixXd whitener;    // n x m
  Eigen::MatrixXd dewhitener;  // m x n
  Eigen::VectorXd variances;   // n retained eigenvalues, descending
};

struct Whitened {
  Eigen::MatrixXd z;  // n x T
  WhiteningModel model;
};

/// Sample covariance with the 1/T normalisation used throughout.
inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& centered) {
  return centered * centered.transpose() / static_cast<double>(centered.cols());
}

/// Columns of `x` are samples. Keeps the top `n_components` principal axes.
inline Whitened center_whiten(const Eigen::MatrixXd& x, int n_components) {
  const Eigen::Index m = x.rows(), t = x.cols();
  if (n_components < 1 || n_components > m) fail(Errc::invalid_argument, "n_components must be in 1..dim");
  if (t <= n_components) fail(Errc::invalid_argument, "need more samples than components");
  Whitened out;
  out.model.mean = x.rowwise().mean();
  const Eigen::MatrixXd xc = x.colwise() - out.model.mean;
  for (Eigen::Index r = 0; r < m; ++r)
    if (xc.row(r).squaredNorm() == 0.0) fail(Errc::degenerate_covariance, "constant input row");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance(xc));
  const Eigen::Index n = n_components;
  out.model.variances.resize(n);
  Eigen::MatrixXd basis(m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = m - 1 - i;  // eigenvalues come ascending
    const double ev = es.eigenvalues()(src);
    if (!(ev > 1e-12)) fail(Errc::degenerate_covariance, "covariance rank below n_components");
    out.model.variances(i) = ev;
    basis.col(i) = es.eigenvectors().col(src);
  }
  const Eigen::VectorXd inv_sqrt = out.model.variances.cwiseSqrt().cwiseInverse();
  out.model.whitener = inv_sqrt.asDiagonal() * basis.transpose();
  out.model.dewhitener = basis * out.model.variances.cwiseSqrt().asDiagonal();
  out.z = out.model.whitener * xc;
  return out;
}

namespace detail {

inline Eigen::VectorXd standardized(const Eigen::VectorXd& y) {
  if (y.size() < 4) fail(Errc::invalid_argument, "need at least 4 samples");
  const Eigen::VectorXd c = y.array() - y.mean();
  const double var = c.squaredNorm() / static_cast<double>(y.size());
  if (!(var > 0.0)) fail(Errc::degenerate_data, "zero-variance sample");
  return c / std::sqrt(var);
}

/// G'(u) and G''(u) for the two contrasts.
inline void contrast_derivs(Contrast g, const Eigen::ArrayXd& u, Eigen::ArrayXd& g1, Eigen::ArrayXd& g2) {
  if (g == Contrast::quartic) {
    g1 = u.cube();
    g2 = 3.0 * u.square();
  } else {
    const Eigen::ArrayXd e = (-0.5 * u.square()).exp();
    g1 = u * e;
    g2 = (1.0 - u.square()) * e;
  }
}

}  // namespace detail

/// Cumulant approximation: J = k3^2/12 + k4^2/48 on the standardized sample.
inline double negentropy_kurtosis(const Eigen::VectorXd& y) {
  const Eigen::ArrayXd z = detail::standardized(y).array();
  const double k3 = z.cube().mean();
  const double k4 = z.square().square().mean() - 3.0;
  return k3 * k3 / 12.0 + k4 * k4 / 48.0;
}

/// Contrast approximation: J = (E G(y) - E G(v))^2 with v standard normal.
inline double negentropy_contrast(const Eigen::VectorXd& y, Contrast g) {
  const Eigen::ArrayXd z = detail::standardized(y).array();
  double eg, egauss;
  if (g == Contrast::quartic) {
    eg = z.square().square().mean() / 4.0;
    egauss = 0.75;
  } else {
    eg = -(-0.5 * z.square()).exp().mean();
    egauss = -1.0 / std::sqrt(2.0);
  }
  return (eg - egauss) * (eg - egauss);
}

struct UnmixingMatrix {
  Eigen::MatrixXd w;                // n x dim(Z), rows are unit vectors
  std::vector<int> iterations;      // per row (deflation) or shared (symmetric)
  std::vector<bool> converged;

  bool all_converged() const {
    return std::all_of(converged.begin(), converged.end(), [](bool b) { return b; });
  }
};

struct FastIcaOptions {
  Contrast contrast = Contrast::quartic;
  double tol = 1e-6;
  int max_iter = 500;
  std::uint64_t seed = 0;
};

/// (W W^T)^{-1/2} W via the symmetric eigendecomposition, floor 1e-12.
inline Eigen::MatrixXd symmetric_decorrelate(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w * w.transpose());
  const Eigen::VectorXd d = es.eigenvalues().cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose() * w;
}

namespace detail {

inline Eigen::MatrixXd gaussian_rows(Eigen::Index n, Eigen::Index dim, std::uint64_t seed) {
  KeyedPrng prng(seed);
  Eigen::MatrixXd w(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) w(i, j) = prng.gaussian();
  return w;
}

/// E{z G'(w^T z)} - E{G''(w^T z)} w for every row of w at once.
inline Eigen::MatrixXd fixed_point(const Eigen::MatrixXd& z, const Eigen::MatrixXd& w, Contrast g) {
  const double inv_t = 1.0 / static_cast<double>(z.cols());
  const Eigen::MatrixXd proj = w * z;  // n x T
  Eigen::MatrixXd next(w.rows(), w.cols());
  Eigen::ArrayXd g1, g2;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    contrast_derivs(g, proj.row(i).transpose().array(), g1, g2);
    next.row(i) = (z * g1.matrix()).transpose() * inv_t - g2.mean() * w.row(i);
  }
  return next;
}

inline void check_dims(const Eigen::MatrixXd& z, int n_components) {
  if (n_components < 1 || n_components > z.rows())
    fail(Errc::invalid_argument, "n_components exceeds whitened dimension");
  if (z.cols() < 2) fail(Errc::invalid_argument, "need at least 2 samples");
}

}  // namespace detail

inline UnmixingMatrix fastica_deflation(const Eigen::MatrixXd& z, int n_components, const FastIcaOptions& opt = {}) {
  detail::check_dims(z, n_components);
  UnmixingMatrix out;
  out.w = Eigen::MatrixXd::Zero(n_components, z.rows());
  const Eigen::MatrixXd init = detail::gaussian_rows(n_components, z.rows(), opt.seed);
  for (int i = 0; i < n_components; ++i) {
    Eigen::RowVectorXd w = init.row(i);
    auto deflate = [&](Eigen::RowVectorXd& v) {
      for (int j = 0; j < i; ++j) v -= v.dot(out.w.row(j)) * out.w.row(j);
      v.normalize();
    };
    deflate(w);
    bool ok = false;
    int it = 0;
    while (it < opt.max_iter) {
      ++it;
      Eigen::RowVectorXd next = detail::fixed_point(z, w, opt.contrast);
      deflate(next);
      const double c = std::abs(next.dot(w));
      w = next;
      if (c > 1.0 - opt.tol) {
        ok = true;
        break;
      }
    }
    out.w.row(i) = w;
    out.iterations.push_back(it);
    out.converged.push_back(ok);
  }
  return out;
}

inline UnmixingMatrix fastica_symmetric(const Eigen::MatrixXd& z, int n_components, const FastIcaOptions& opt = {}) {
  detail::check_dims(z, n_components);
  UnmixingMatrix out;
  Eigen::MatrixXd w = symmetric_decorrelate(detail::gaussian_rows(n_components, z.rows(), opt.seed));
  bool ok = false;
  int it = 0;
  while (it < opt.max_iter) {
    ++it;
    const Eigen::MatrixXd next = symmetric_decorrelate(detail::fixed_point(z, w, opt.contrast));
    const double c = (next * w.transpose()).diagonal().cwiseAbs().minCoeff();
    w = next;
    if (c > 1.0 - opt.tol) {
      ok = true;
      break;
    }
  }
  out.w = w;
  out.iterations.assign(static_cast<std::size_t>(n_components), it);
  out.converged.assign(static_cast<std::size_t>(n_components), ok);
  return out;
}

/// Whitening followed by FastICA; unmix maps centred data to sources and
/// mix is its right inverse (columns are the estimated basis vectors).
struct IcaModel {
  WhiteningModel whitening;
  UnmixingMatrix rotation;
  Eigen::MatrixXd unmix;  // n x m
  Eigen::MatrixXd mix;    // m x n

  Eigen::MatrixXd sources(const Eigen::MatrixXd& x) const {
    return unmix * (x.colwise() - whitening.mean);
  }
};

inline IcaModel fit(const Eigen::MatrixXd& x, int n_components, bool symmetric, const FastIcaOptions& opt = {}) {
  Whitened wh = center_whiten(x, n_components);
  IcaModel m;
  m.rotation = symmetric ? fastica_symmetric(wh.z, n_components, opt) : fastica_deflation(wh.z, n_components, opt);
  m.unmix = m.rotation.w * wh.model.whitener;
  m.mix = wh.model.dewhitener * m.rotation.w.transpose();
  m.whitening = std::move(wh.model);
  return m;
}

/// Permutation/scale-invariant separation error of P = W A, in [0, 1];
/// 0 exactly when P is a scaled permutation.
inline double amari_index(const Eigen::MatrixXd& w, const Eigen::MatrixXd& a) {
  if (w.cols() != a.rows() || w.rows() != a.cols()) fail(Errc::dimension_mismatch, "W A must be square");
  if (a.rows() == a.cols() && Eigen::FullPivLU<Eigen::MatrixXd>(a).rank() < a.rows())
    fail(Errc::singular_matrix, "mixing matrix is singular");
  const Eigen::MatrixXd p = (w * a).cwiseAbs();
  const Eigen::Index n = p.rows();
  if (n < 2) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double rmax = p.row(i).maxCoeff(), cmax = p.col(i).maxCoeff();
    if (rmax == 0.0 || cmax == 0.0) fail(Errc::singular_matrix, "W A has a zero row or column");
    s += p.row(i).sum() / rmax - 1.0;
    s += p.col(i).sum() / cmax - 1.0;
  }
  return s / (2.0 * static_cast<double>(n) * static_cast<double>(n - 1));
}

inline double normalized_correlation(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) fail(Errc::dimension_mismatch, "vector lengths differ");
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) fail(Errc::invalid_argument, "zero vector");
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

/// For each column of `truth`, the largest |normalized correlation| with any
/// column of `estimate` (sign and permutation invariant).
inline std::vector<double> best_abs_correlations(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < truth.cols(); ++i) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < estimate.cols(); ++j)
      best = std::max(best, std::abs(normalized_correlation(truth.col(i), estimate.col(j))));
    out.push_back(best);
  }
  return out;
}

}  // namespace stegolab::ica
