#pragma once

// Sparse decomposition over a learned dictionary: orthogonal matching pursuit
// and K-SVD dictionary learning, plus the binary key formats (SDICT1 for the
// dictionary, SCODE1 for a stored sparse code).

#include <Eigen/Core>
#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stegolab/error.hpp"
#include "stegolab/prng.hpp"

namespace stegolab::sparse {

struct Dictionary {
  Eigen::MatrixXd atoms;  // atom_dim x atom_count, unit-norm columns

  Eigen::Index atom_dim() const noexcept { return atoms.rows(); }
  Eigen::Index atom_count() const noexcept { return atoms.cols(); }

  double max_norm_error() const {
    double e = 0.0;
    for (Eigen::Index j = 0; j < atoms.cols(); ++j)
      e = std::max(e, std::abs(atoms.col(j).norm() - 1.0));
    return e;
  }
};

struct SparseCode {
  Eigen::MatrixXd coeffs;                  // atom_count x columns
  std::vector<std::vector<int>> support;   // ascending row indices per column

  Eigen::Index columns() const noexcept { return coeffs.cols(); }

  std::size_t nnz() const {
    std::size_t n = 0;
    for (const auto& s : support) n += s.size();
    return n;
  }

  /// Rebuilds the support lists from the nonzero pattern of `coeffs`.
  void sync_support() {
    support.assign(static_cast<std::size_t>(coeffs.cols()), {});
    for (Eigen::Index c = 0; c < coeffs.cols(); ++c)
      for (Eigen::Index r = 0; r < coeffs.rows(); ++r)
        if (coeffs(r, c) != 0.0) support[static_cast<std::size_t>(c)].push_back(static_cast<int>(r));
  }
};

struct OmpResult {
  Eigen::VectorXd coeffs;
  std::vector<int> selected;  // atoms in selection order
  int iterations = 0;
  double residual_norm = 0.0;
};

namespace detail {

/// OMP core working on the Gram matrix G = D^T D and the projections
/// D^T x. The support least squares is solved through an incrementally
/// grown Cholesky factor of G restricted to the support.
inline OmpResult omp_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& proj,
                          double x_norm2, int t0, double residual_tol) {
  const Eigen::Index k = gram.rows();
  OmpResult res;
  res.coeffs = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(t0, t0);
  Eigen::VectorXd corr = proj;
  Eigen::VectorXd gamma;
  std::vector<char> used(static_cast<std::size_t>(k), 0);
  double r2 = x_norm2;

  for (int it = 0; it < t0; ++it) {
    if (std::sqrt(std::max(r2, 0.0)) <= residual_tol) break;
    Eigen::Index best = -1;
    double best_mag = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double m = std::abs(corr(j));
      if (m > best_mag) {  // strict: ties keep the lowest index
        best_mag = m;
        best = j;
      }
    }
    if (best < 0) break;  // residual orthogonal to every remaining atom

    const int s = static_cast<int>(res.selected.size());
    double pivot2 = gram(best, best);
    if (s > 0) {
      Eigen::VectorXd g(s);
      for (int i = 0; i < s; ++i) g(i) = gram(res.selected[static_cast<std::size_t>(i)], best);
      Eigen::VectorXd w = chol.topLeftCorner(s, s).triangularView<Eigen::Lower>().solve(g);
      chol.row(s).head(s) = w.transpose();
      pivot2 -= w.squaredNorm();
    }
    if (pivot2 <= 1e-12) pivot2 += 1e-12;
    chol(s, s) = std::sqrt(pivot2);
    res.selected.push_back(static_cast<int>(best));
    used[static_cast<std::size_t>(best)] = 1;

    const int sz = s + 1;
    Eigen::VectorXd rhs(sz);
    for (int i = 0; i < sz; ++i) rhs(i) = proj(res.selected[static_cast<std::size_t>(i)]);
    const auto L = chol.topLeftCorner(sz, sz).triangularView<Eigen::Lower>();
    gamma = L.transpose().solve(L.solve(rhs));

    corr = proj;
    for (int i = 0; i < sz; ++i) corr -= gram.col(res.selected[static_cast<std::size_t>(i)]) * gamma(i);
    r2 = x_norm2 - rhs.dot(gamma);
    res.iterations = sz;
  }
  for (std::size_t i = 0; i < res.selected.size(); ++i)
    res.coeffs(res.selected[i]) = gamma(static_cast<Eigen::Index>(i));
  res.residual_norm = std::sqrt(std::max(r2, 0.0));
  return res;
}

inline void check_omp_args(int t0, double residual_tol) {
  if (t0 < 1) fail(Errc::invalid_argument, "t0 must be >= 1");
  if (!(residual_tol >= 0.0)) fail(Errc::invalid_argument, "residual_tol must be >= 0");
}

}  // namespace detail

/// Greedy orthogonal matching pursuit of x over the dictionary atoms.
inline OmpResult omp(const Dictionary& dict, const Eigen::VectorXd& x, int t0,
                     double residual_tol = 0.0) {
  detail::check_omp_args(t0, residual_tol);
  if (x.size() != dict.atom_dim()) fail(Errc::dimension_mismatch, "signal length != atom dimension");
  const int cap = static_cast<int>(std::min<Eigen::Index>(t0, dict.atom_count()));
  const Eigen::MatrixXd gram = dict.atoms.transpose() * dict.atoms;
  OmpResult r = detail::omp_gram(gram, dict.atoms.transpose() * x, x.squaredNorm(), cap, residual_tol);
  r.residual_norm = (x - dict.atoms * r.coeffs).norm();
  return r;
}

/// Column-wise OMP of a whole data matrix.
inline SparseCode omp_batch(const Dictionary& dict, const Eigen::MatrixXd& data, int t0,
                            double residual_tol = 0.0) {
  detail::check_omp_args(t0, residual_tol);
  if (data.rows() != dict.atom_dim()) fail(Errc::dimension_mismatch, "data rows != atom dimension");
  const int cap = static_cast<int>(std::min<Eigen::Index>(t0, dict.atom_count()));
  const Eigen::MatrixXd gram = dict.atoms.transpose() * dict.atoms;
  const Eigen::MatrixXd proj = dict.atoms.transpose() * data;
  SparseCode code;
  code.coeffs = Eigen::MatrixXd::Zero(dict.atom_count(), data.cols());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const OmpResult r = detail::omp_gram(gram, proj.col(c), data.col(c).squaredNorm(), cap, residual_tol);
    code.coeffs.col(c) = r.coeffs;
  }
  code.sync_support();
  return code;
}

inline Eigen::MatrixXd reconstruct(const Dictionary& dict, const SparseCode& code) {
  if (code.coeffs.rows() != dict.atom_count())
    fail(Errc::dimension_mismatch, "code rows != atom count");
  return dict.atoms * code.coeffs;
}

struct Rank1 {
  Eigen::VectorXd u;
  double sigma = 0.0;
  Eigen::VectorXd v;
};

/// Dominant singular triplet by alternating power iteration. `start`, when
/// non-empty, seeds the right vector (warm start); otherwise it is drawn from
/// a Gaussian stream keyed by `seed`.
inline Rank1 rank1_svd(const Eigen::MatrixXd& m, int iters, std::uint64_t seed,
                       const Eigen::VectorXd& start = {}) {
  if (m.size() == 0 || m.squaredNorm() == 0.0) fail(Errc::invalid_argument, "rank1_svd of a zero matrix");
  if (iters < 1) fail(Errc::invalid_argument, "iters must be >= 1");
  Eigen::VectorXd v(m.cols());
  if (start.size() == m.cols() && start.squaredNorm() > 0.0) {
    v = start;
  } else {
    KeyedPrng prng(seed);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = prng.gaussian();
  }
  // A start orthogonal to the dominant right vector would stall; fall back
  // to the row of largest norm.
  if ((m * v).squaredNorm() == 0.0) {
    Eigen::Index r;
    m.rowwise().squaredNorm().maxCoeff(&r);
    v = m.row(r).transpose();
  }
  v.normalize();
  Rank1 out;
  double prev = -1.0;
  for (int it = 0; it < iters; ++it) {
    out.u = m * v;
    out.u.normalize();
    v = m.transpose() * out.u;
    out.sigma = v.norm();
    v /= out.sigma;
    if (std::abs(out.sigma - prev) <= 1e-15 * out.sigma) break;
    prev = out.sigma;
  }
  out.v = v;
  return out;
}

struct KsvdResult {
  Dictionary dict;
  SparseCode code;
  std::vector<double> objective_history;  // [0] = initial code, then one per sweep
  double objective() const { return objective_history.back(); }
};

struct KsvdOptions {
  int power_iters = 200;
  double residual_tol = 0.0;
};

/// K-SVD: alternate OMP sparse coding with per-atom rank-1 updates of the
/// restricted residual. Each column keeps its previous code when OMP does
/// not improve it, and an atom update is only accepted when it lowers the
/// restricted error, so the objective never increases.
inline KsvdResult ksvd(const Eigen::MatrixXd& y, int k, int t0, int iters, std::uint64_t seed,
                       const KsvdOptions& opt = {}) {
  const Eigen::Index n2 = y.rows(), cols = y.cols();
  if (k < 1 || k > cols) fail(Errc::invalid_argument, "atom count must satisfy 1 <= k <= J");
  if (t0 < 1 || t0 > std::min<Eigen::Index>(k, n2))
    fail(Errc::invalid_argument, "t0 must satisfy 1 <= t0 <= min(k, n^2)");
  if (iters < 0) fail(Errc::invalid_argument, "iters must be >= 0");
  if (y.size() == 0 || y.maxCoeff() == y.minCoeff()) fail(Errc::degenerate_data, "data has zero variance");

  // Initial atoms: k distinct nonzero data columns, seeded partial shuffle.
  std::vector<Eigen::Index> candidates;
  for (Eigen::Index c = 0; c < cols; ++c)
    if (y.col(c).squaredNorm() > 0.0) candidates.push_back(c);
  if (static_cast<Eigen::Index>(candidates.size()) < k)
    fail(Errc::degenerate_data, "fewer nonzero data columns than atoms");
  KeyedPrng prng(seed);
  KsvdResult out;
  out.dict.atoms.resize(n2, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto pick = static_cast<std::size_t>(j) +
                      static_cast<std::size_t>(prng.below(candidates.size() - static_cast<std::size_t>(j)));
    std::swap(candidates[static_cast<std::size_t>(j)], candidates[pick]);
    out.dict.atoms.col(j) = y.col(candidates[static_cast<std::size_t>(j)]).normalized();
  }

  SparseCode& code = out.code;
  code = omp_batch(out.dict, y, t0, opt.residual_tol);
  Eigen::MatrixXd resid = y - out.dict.atoms * code.coeffs;
  out.objective_history.push_back(resid.squaredNorm());

  for (int sweep = 0; sweep < iters; ++sweep) {
    // (a) sparse coding; a column keeps its old code unless OMP does better.
    if (sweep > 0) {
      const SparseCode fresh = omp_batch(out.dict, y, t0, opt.residual_tol);
      for (Eigen::Index c = 0; c < cols; ++c) {
        const Eigen::VectorXd r_new = y.col(c) - out.dict.atoms * fresh.coeffs.col(c);
        if (r_new.squaredNorm() < resid.col(c).squaredNorm()) {
          code.coeffs.col(c) = fresh.coeffs.col(c);
          resid.col(c) = r_new;
        }
      }
    }

    // (b) atom updates in index order.
    std::vector<char> replaced_from(static_cast<std::size_t>(cols), 0);
    for (Eigen::Index j = 0; j < k; ++j) {
      std::vector<Eigen::Index> users;
      for (Eigen::Index c = 0; c < cols; ++c)
        if (code.coeffs(j, c) != 0.0) users.push_back(c);

      if (users.empty()) {
        Eigen::Index worst = -1;
        double worst_err = 0.0;
        for (Eigen::Index c = 0; c < cols; ++c) {
          const double e = resid.col(c).squaredNorm();
          if (!replaced_from[static_cast<std::size_t>(c)] && e > worst_err) {
            worst_err = e;
            worst = c;
          }
        }
        if (worst >= 0) {
          out.dict.atoms.col(j) = y.col(worst).normalized();
          replaced_from[static_cast<std::size_t>(worst)] = 1;
        }
        continue;
      }

      const auto nu = static_cast<Eigen::Index>(users.size());
      Eigen::MatrixXd err(n2, nu);
      Eigen::VectorXd row(nu);
      for (Eigen::Index i = 0; i < nu; ++i) {
        row(i) = code.coeffs(j, users[static_cast<std::size_t>(i)]);
        err.col(i) = resid.col(users[static_cast<std::size_t>(i)]) + out.dict.atoms.col(j) * row(i);
      }
      if (err.squaredNorm() == 0.0) continue;
      const Rank1 r1 = rank1_svd(err, opt.power_iters, prng_mix(seed, static_cast<std::uint64_t>(j)), row);
      const Eigen::MatrixXd cand = err - r1.u * (r1.sigma * r1.v.transpose());
      const Eigen::MatrixXd prev = err - out.dict.atoms.col(j) * row.transpose();
      if (cand.squaredNorm() > prev.squaredNorm()) continue;
      out.dict.atoms.col(j) = r1.u;
      for (Eigen::Index i = 0; i < nu; ++i) {
        const Eigen::Index c = users[static_cast<std::size_t>(i)];
        code.coeffs(j, c) = r1.sigma * r1.v(i);
        resid.col(c) = cand.col(i);
      }
    }
    out.objective_history.push_back(resid.squaredNorm());
  }
  code.sync_support();
  return out;
}

// --- key file formats -------------------------------------------------------

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  void expect(std::string_view magic) {
    if (b_.size() < magic.size() || std::memcmp(b_.data(), magic.data(), magic.size()) != 0)
      fail(Errc::bad_magic, "expected magic " + std::string(magic.substr(0, magic.size() - 1)));
    pos_ = magic.size();
  }

  std::size_t ascii_uint(char terminator) {
    std::size_t v = 0, digits = 0;
    while (pos_ < b_.size() && b_[pos_] >= '0' && b_[pos_] <= '9') {
      v = v * 10 + (b_[pos_++] - '0');
      if (++digits > 9) fail(Errc::bad_header, "header number too large");
    }
    if (digits == 0 || pos_ >= b_.size() || b_[pos_] != static_cast<std::uint8_t>(terminator))
      fail(Errc::bad_header, "malformed key header");
    ++pos_;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }

  bool at_end() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) fail(Errc::truncated_data, "key file truncated");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// SDICT1: "SDICT1\n", ASCII "n2 k\n", then row-major little-endian doubles.
inline std::vector<std::uint8_t> write_dictionary(const Dictionary& d) {
  const std::string head = "SDICT1\n" + std::to_string(d.atom_dim()) + " " + std::to_string(d.atom_count()) + "\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.reserve(out.size() + static_cast<std::size_t>(d.atoms.size()) * 8);
  for (Eigen::Index r = 0; r < d.atoms.rows(); ++r)
    for (Eigen::Index c = 0; c < d.atoms.cols(); ++c) detail::put_f64(out, d.atoms(r, c));
  return out;
}

inline Dictionary read_dictionary(std::span<const std::uint8_t> bytes) {
  detail::Reader rd(bytes);
  rd.expect("SDICT1\n");
  const std::size_t n2 = rd.ascii_uint(' ');
  const std::size_t k = rd.ascii_uint('\n');
  if (n2 == 0 || k == 0) fail(Errc::bad_header, "empty dictionary");
  Dictionary d;
  d.atoms.resize(static_cast<Eigen::Index>(n2), static_cast<Eigen::Index>(k));
  for (Eigen::Index r = 0; r < d.atoms.rows(); ++r)
    for (Eigen::Index c = 0; c < d.atoms.cols(); ++c) d.atoms(r, c) = rd.f64();
  if (!rd.at_end()) fail(Errc::bad_header, "trailing bytes after dictionary");
  return d;
}

/// SCODE1: "SCODE1\n", ASCII "k J\n", then per column a u32 count followed
/// by (u32 row, f64 value) pairs, all little-endian.
inline std::vector<std::uint8_t> write_sparse_code(const SparseCode& code) {
  const std::string head =
      "SCODE1\n" + std::to_string(code.coeffs.rows()) + " " + std::to_string(code.coeffs.cols()) + "\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  for (Eigen::Index c = 0; c < code.coeffs.cols(); ++c) {
    const auto& s = code.support[static_cast<std::size_t>(c)];
    detail::put_u32(out, static_cast<std::uint32_t>(s.size()));
    for (int r : s) {
      detail::put_u32(out, static_cast<std::uint32_t>(r));
      detail::put_f64(out, code.coeffs(r, c));
    }
  }
  return out;
}

inline SparseCode read_sparse_code(std::span<const std::uint8_t> bytes) {
  detail::Reader rd(bytes);
  rd.expect("SCODE1\n");
  const std::size_t k = rd.ascii_uint(' ');
  const std::size_t cols = rd.ascii_uint('\n');
  SparseCode code;
  code.coeffs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(cols));
  code.support.resize(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    const std::uint32_t n = rd.u32();
    if (n > k) fail(Errc::bad_header, "support larger than atom count");
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::uint32_t r = rd.u32();
      if (r >= k) fail(Errc::bad_header, "support row out of range");
      code.coeffs(r, static_cast<Eigen::Index>(c)) = rd.f64();
      code.support[c].push_back(static_cast<int>(r));
    }
  }
  if (!rd.at_end()) fail(Errc::bad_header, "trailing bytes after sparse code");
  return code;
}

}  // namespace stegolab::sparse
