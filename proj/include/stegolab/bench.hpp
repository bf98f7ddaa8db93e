#pragma once

// Experiment suite behind `stegolab bench` and the acceptance binary. Each
// check returns a CriterionResult with the measured values and the fixed
// thresholds it was judged against. Trials take seeds prng_mix(master, i).

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "stegolab/ica.hpp"
#include "stegolab/ica_watermark.hpp"
#include "stegolab/lsb_stego.hpp"
#include "stegolab/sparse_stego.hpp"
#include "stegolab/steganalysis.hpp"

namespace stegolab::bench {

using imageio::GrayImage;

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string threshold;
  std::vector<std::pair<std::string, double>> metrics;
  std::string note;

  void add(std::string key, double v) { metrics.emplace_back(std::move(key), v); }
};

struct BenchConfig {
  std::filesystem::path corpus_dir;
  std::uint64_t seed = 2024;
  std::filesystem::path cli_path;   // determinism check runs this binary
  std::filesystem::path work_dir;   // scratch space for that check
};

/// Named CSV tables produced along the way (scatter data, per-image rows).
using Tables = std::map<std::string, std::string>;

// --- infrastructure -----------------------------------------------------------

inline unsigned thread_count() {
  unsigned n = std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("STEGOLAB_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// fn(i) for i in [0, n). Callers write into slot i only, so results do not
/// depend on scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first;
  std::mutex mu;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

struct NamedImage {
  std::string name;
  GrayImage image;
};

inline std::vector<NamedImage> load_corpus(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> paths;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pgm") paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  std::vector<NamedImage> out;
  for (const auto& p : paths) out.push_back({p.stem().string(), imageio::load_pgm(p)});
  if (out.empty()) fail(Errc::io, "no .pgm files in " + dir.string());
  return out;
}

inline Bytes random_bytes(std::size_t n, std::uint64_t seed) {
  KeyedPrng p(seed);
  Bytes b(n);
  for (auto& v : b) v = static_cast<std::uint8_t>(p.next() >> 56);
  return b;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline lsb::KeySet trial_keys(std::uint64_t master, std::size_t i) {
  return {prng_mix(master, 3 * i), prng_mix(master, 3 * i + 1), prng_mix(master, 3 * i + 2)};
}

inline const GrayImage& find_image(const std::vector<NamedImage>& corpus, const std::string& name) {
  for (const auto& c : corpus)
    if (c.name == name) return c.image;
  return corpus.front().image;
}

// --- sparse (1-4) ---------------------------------------------------------------

inline constexpr std::size_t kSparseMessageBytes = 384;  // 3072 bits

/// 1 and 2 share one embedding of a 3-kilobit message into the camera image.
inline std::vector<CriterionResult> sparse_capacity_and_psnr(const std::vector<NamedImage>& corpus,
                                                             std::uint64_t seed) {
  const GrayImage& cover = find_image(corpus, "camera");
  sparse::SparseStegoParams p;
  p.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = sparse::sparse_embed(cover, random_bytes(kSparseMessageBytes, seed), p);
  const double secs = seconds_since(t0);

  CriterionResult c1{1, "sparse capacity", false, "capacity_bits == 31744, theoretical == 32768, nnz <= 31744, runtime < 300 s"};
  c1.add("width", static_cast<double>(cover.width));
  c1.add("capacity_bits", static_cast<double>(r.report.capacity_bits));
  c1.add("theoretical_bits", static_cast<double>(r.report.theoretical_bits));
  c1.add("nnz", static_cast<double>(r.report.nnz));
  c1.add("runtime_s", secs);
  c1.pass = cover.width == 256 && cover.height == 256 && r.report.capacity_bits == 31744 &&
            r.report.theoretical_bits == 32768 && r.report.nnz <= 31744 && secs < 300.0;

  CriterionResult c2{2, "sparse imperceptibility", false, "27 <= PSNR <= 36 dB"};
  c2.add("psnr_db", r.report.psnr_db);
  c2.add("message_bits", 8.0 * kSparseMessageBytes);
  c2.pass = r.report.psnr_db >= 27.0 && r.report.psnr_db <= 36.0;
  return {c1, c2};
}

inline CriterionResult sparse_oracle_roundtrip(const std::vector<NamedImage>& corpus, std::uint64_t master,
                                               std::size_t trials, Tables& tables) {
  std::vector<double> oracle(trials), blind(trials);
  std::vector<int> exact(trials);
  parallel_for(trials, [&](std::size_t i) {
    const GrayImage& cover = corpus[i % corpus.size()].image;
    sparse::SparseStegoParams p;
    p.seed = prng_mix(master, i);
    const Bytes msg = random_bytes(kSparseMessageBytes, prng_mix(master ^ 0x5eed, i));
    const auto r = sparse::sparse_embed(cover, msg, p);
    const Bits ob = sparse::sparse_carrier_bits(r.stego, r.key, p, &r.modified_code);
    oracle[i] = sparse::framed_ber(ob, msg);
    exact[i] = unframe_message(ob) == msg;
    blind[i] = sparse::framed_ber(sparse::sparse_carrier_bits(r.stego, r.key, p), msg);
  });
  std::ostringstream csv;
  csv << "trial,image,oracle_ber,blind_ber\n";
  for (std::size_t i = 0; i < trials; ++i)
    csv << i << ',' << corpus[i % corpus.size()].name << ',' << oracle[i] << ',' << blind[i] << '\n';
  tables["sparse_roundtrip.csv"] = csv.str();

  CriterionResult c{3, "sparse oracle round-trip", false, "oracle BER == 0 on every trial"};
  c.add("trials", static_cast<double>(trials));
  c.add("max_oracle_ber", *std::max_element(oracle.begin(), oracle.end()));
  c.add("exact_messages", static_cast<double>(std::count(exact.begin(), exact.end(), 1)));
  c.add("median_blind_ber", median(blind));
  c.pass = *std::max_element(oracle.begin(), oracle.end()) == 0.0 &&
           std::count(exact.begin(), exact.end(), 1) == static_cast<long>(trials);
  c.note = "blind BER is reported only";
  return c;
}

inline CriterionResult sparse_noise(const std::vector<NamedImage>& corpus, std::uint64_t master, Tables& tables) {
  const std::size_t n = std::min<std::size_t>(10, corpus.size());
  std::vector<double> clean(n), noisy(n), snr(n), density(n);
  parallel_for(n, [&](std::size_t i) {
    sparse::SparseStegoParams p;
    p.seed = prng_mix(master, i);
    const Bytes msg = random_bytes(kSparseMessageBytes, prng_mix(master ^ 0xb17, i));
    const auto r = sparse::sparse_embed(corpus[i].image, msg, p);
    clean[i] = sparse::framed_ber(sparse::sparse_carrier_bits(r.stego, r.key, p), msg);
    const std::uint64_t ns = prng_mix(master ^ 0x5a17, i);
    density[i] = analysis::calibrate_salt_pepper(r.stego, 13.0, ns);
    const auto nz = analysis::salt_pepper(r.stego, density[i], ns);
    snr[i] = nz.snr_db;
    noisy[i] = sparse::framed_ber(sparse::sparse_carrier_bits(nz.image, r.key, p), msg);
  });
  std::vector<double> inc(n);
  double worst_snr_err = 0.0;
  std::ostringstream csv;
  csv << "image,clean_ber,noisy_ber,increase,snr_db,density\n";
  for (std::size_t i = 0; i < n; ++i) {
    inc[i] = noisy[i] - clean[i];
    worst_snr_err = std::max(worst_snr_err, std::abs(snr[i] - 13.0));
    csv << corpus[i].name << ',' << clean[i] << ',' << noisy[i] << ',' << inc[i] << ',' << snr[i] << ','
        << density[i] << '\n';
  }
  tables["sparse_noise.csv"] = csv.str();

  CriterionResult c{4, "sparse noise sensitivity", false,
                    "|SNR - 13| <= 0.5 dB; median BER increase > 0 and in [0.05, 0.15]"};
  const double med = median(inc);
  c.add("images", static_cast<double>(n));
  c.add("median_clean_ber", median(clean));
  c.add("median_noisy_ber", median(noisy));
  c.add("median_increase", med);
  c.add("max_snr_error_db", worst_snr_err);
  c.pass = n >= 10 && worst_snr_err <= 0.5 && med > 0.0 && med >= 0.05 && med <= 0.15;
  return c;
}

// --- LSB family (5-9) -------------------------------------------------------------

/// Small test image with an uneven histogram: a noisy ramp around a random
/// level, so pair imbalances and locks occur.
inline GrayImage random_test_image(std::uint64_t seed) {
  KeyedPrng p(seed);
  const std::size_t w = 16 + p.below(49), h = 16 + p.below(49);
  const double base = 20.0 + static_cast<double>(p.below(200));
  const double sd = 1.0 + static_cast<double>(p.below(30));
  const double slope = (p.uniform() - 0.5) * 2.0;
  GrayImage img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      img.at(x, y) = imageio::quantize_pixel(base + slope * static_cast<double>(x) + sd * p.gaussian());
  return img;
}

struct FittedEmbed {
  lsb::LsbResult result;
  Bytes message;
  int refits = 0;
};

/// Capacity of the histogram-preserving walks depends on the encrypted bit
/// values, so the dry-run estimate can overshoot by a few bits. On a
/// capacity error the message is cut to the measured capacity and retried.
inline FittedEmbed embed_fitting(const GrayImage& cover, Bytes msg, lsb::Method m, const lsb::KeySet& keys) {
  FittedEmbed out;
  for (;;) {
    try {
      out.result = lsb::embed(cover, msg, m, keys);
      out.message = std::move(msg);
      return out;
    } catch (const Error& e) {
      if (e.code() != Errc::capacity_exceeded || !e.capacity() || msg.empty()) throw;
      const std::size_t fit = *e.capacity() > kHeaderBits ? (*e.capacity() - kHeaderBits) / 8 : 0;
      msg.resize(std::min(fit, msg.size() - 1));
      ++out.refits;
    }
  }
}

inline std::vector<CriterionResult> lsb_properties(std::uint64_t master, std::size_t trials) {
  std::vector<int> hist_ok(trials), rt_ok(trials), cap_short(trials), refits(trials);
  parallel_for(trials, [&](std::size_t i) {
    const GrayImage cover = random_test_image(prng_mix(master, i));
    const lsb::KeySet keys = trial_keys(master ^ 0x15b, i);
    KeyedPrng p(prng_mix(master ^ 0x1e7, i));
    bool hist = true, rt = true;
    for (lsb::Method m : {lsb::Method::lsb, lsb::Method::lsbplus, lsb::Method::improved}) {
      const std::size_t cap = lsb::effective_capacity(cover, m, keys);
      if (cap < kHeaderBits) {
        cap_short[i] = 1;
        continue;
      }
      const std::size_t max_bytes = (cap - kHeaderBits) / 8;
      FittedEmbed f;
      try {
        f = embed_fitting(cover, random_bytes(p.below(max_bytes + 1), p.next()), m, keys);
      } catch (const Error& e) {
        // even the bare header does not fit this stream
        if (e.code() != Errc::capacity_exceeded) throw;
        cap_short[i] = 1;
        continue;
      }
      refits[i] += f.refits;
      if (m != lsb::Method::lsb) hist = hist && analysis::histogram(f.result.stego) == analysis::histogram(cover);
      rt = rt && lsb::extract(f.result.stego, m, keys) == f.message;
    }
    hist_ok[i] = hist;
    rt_ok[i] = rt;
  });
  const auto count = [](const std::vector<int>& v) { return static_cast<double>(std::count(v.begin(), v.end(), 1)); };
  CriterionResult c5{5, "histogram preservation", false, "h_stego == h_cover on every trial, >= 500 trials"};
  c5.add("trials", static_cast<double>(trials));
  c5.add("preserved", count(hist_ok));
  c5.pass = trials >= 500 && count(hist_ok) == static_cast<double>(trials);
  CriterionResult c6{6, "round-trip integrity", false, "extract(embed(m)) == m for lsb, lsbplus, improved on every trial"};
  c6.add("trials", static_cast<double>(trials));
  c6.add("round_trips", count(rt_ok));
  c6.add("trials_below_header_capacity", count(cap_short));
  c6.add("capacity_refits", static_cast<double>(std::accumulate(refits.begin(), refits.end(), 0)));
  c6.pass = trials >= 500 && count(rt_ok) == static_cast<double>(trials);
  return {c5, c6};
}

inline std::vector<CriterionResult> lsb_corpus(const std::vector<NamedImage>& corpus, std::uint64_t master,
                                               Tables& tables) {
  constexpr std::size_t kKeySets = 3;
  constexpr double kFractions[] = {0.5, 0.75, 0.95};
  const std::size_t n = corpus.size();

  // capacity parity: one key set per image
  std::vector<double> cap_i(n), cap_p(n), rel(n), hchange(n);
  parallel_for(n, [&](std::size_t i) {
    const lsb::KeySet k = trial_keys(master, i);
    cap_i[i] = static_cast<double>(lsb::effective_capacity(corpus[i].image, lsb::Method::improved, k));
    cap_p[i] = static_cast<double>(lsb::effective_capacity(corpus[i].image, lsb::Method::lsbplus, k));
    rel[i] = std::abs(cap_i[i] - cap_p[i]) / cap_p[i];
    hchange[i] = static_cast<double>(analysis::hist_change(corpus[i].image));
  });
  const double hmed = median(hchange);

  // distortion ordering
  const std::size_t trials = n * kKeySets * std::size(kFractions);
  std::vector<double> psnr_i(trials), psnr_p(trials);
  std::vector<std::size_t> ic_i(trials), ic_p(trials);
  parallel_for(trials, [&](std::size_t t) {
    const std::size_t img = t / (kKeySets * std::size(kFractions));
    const std::size_t ks = (t / std::size(kFractions)) % kKeySets;
    const double frac = kFractions[t % std::size(kFractions)];
    const GrayImage& cover = corpus[img].image;
    const lsb::KeySet k = trial_keys(master ^ 0xd157, img * kKeySets + ks);
    const std::size_t cap = std::min(lsb::effective_capacity(cover, lsb::Method::improved, k),
                                     lsb::effective_capacity(cover, lsb::Method::lsbplus, k));
    const std::size_t bits = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(cap)));
    const std::size_t bytes = std::min((bits + 7) / 8, (cap - kHeaderBits) / 8);
    // both methods carry the same message: fit it to improved, then lsbplus
    auto fi = embed_fitting(cover, random_bytes(bytes, prng_mix(master ^ 0x3e55, t)), lsb::Method::improved, k);
    auto fp = embed_fitting(cover, fi.message, lsb::Method::lsbplus, k);
    if (fp.message.size() != fi.message.size()) fi = embed_fitting(cover, fp.message, lsb::Method::improved, k);
    const auto& ri = fi.result;
    const auto& rp = fp.result;
    psnr_i[t] = ri.report.psnr_db;
    psnr_p[t] = rp.report.psnr_db;
    ic_i[t] = ri.report.intentional_count;
    ic_p[t] = rp.report.intentional_count;
  });

  std::ostringstream cap_csv;
  cap_csv << "image,capacity_improved,capacity_lsbplus,relative_gap,hist_change\n";
  for (std::size_t i = 0; i < n; ++i)
    cap_csv << corpus[i].name << ',' << cap_i[i] << ',' << cap_p[i] << ',' << rel[i] << ',' << hchange[i] << '\n';
  tables["lsb_capacity.csv"] = cap_csv.str();

  std::size_t ge = 0, ic_ok = 0, ge_hi = 0, hi = 0;
  std::ostringstream d_csv;
  d_csv << "image,keyset,fraction,psnr_improved,psnr_lsbplus,intentional_improved,intentional_lsbplus\n";
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t img = t / (kKeySets * std::size(kFractions));
    ge += psnr_i[t] >= psnr_p[t];
    ic_ok += ic_i[t] <= ic_p[t];
    if (hchange[img] > hmed) {
      ++hi;
      ge_hi += psnr_i[t] >= psnr_p[t];
    }
    d_csv << corpus[img].name << ',' << (t / std::size(kFractions)) % kKeySets << ','
          << kFractions[t % std::size(kFractions)] << ',' << psnr_i[t] << ',' << psnr_p[t] << ',' << ic_i[t] << ','
          << ic_p[t] << '\n';
  }
  tables["lsb_distortion.csv"] = d_csv.str();

  CriterionResult c7{7, "capacity parity", false, "median |cap_improved - cap_lsbplus| / cap_lsbplus <= 0.05 over >= 10 images"};
  c7.add("images", static_cast<double>(n));
  c7.add("median_relative_gap", median(rel));
  c7.add("max_relative_gap", *std::max_element(rel.begin(), rel.end()));
  c7.pass = n >= 10 && median(rel) <= 0.05;

  CriterionResult c8{8, "distortion ordering", false,
                     "PSNR(improved) >= PSNR(lsbplus) in >= 80% of trials; intentional_count ordering in 100%"};
  c8.add("trials", static_cast<double>(trials));
  c8.add("psnr_ordering_rate", static_cast<double>(ge) / static_cast<double>(trials));
  c8.add("psnr_ordering_rate_high_hist_change", hi ? static_cast<double>(ge_hi) / static_cast<double>(hi) : 0.0);
  c8.add("intentional_ordering_rate", static_cast<double>(ic_ok) / static_cast<double>(trials));
  c8.pass = 5 * ge >= 4 * trials && ic_ok == trials;
  return {c7, c8};
}

inline CriterionResult chi_square(const std::vector<NamedImage>& corpus, std::uint64_t master, Tables& tables) {
  const std::size_t n = corpus.size();
  std::vector<double> p_cover(n), p_lsb(n);
  std::vector<int> identical(n);
  parallel_for(n, [&](std::size_t i) {
    const GrayImage& cover = corpus[i].image;
    const lsb::KeySet k = trial_keys(master ^ 0xc41, i);
    const auto full = lsb::embed(cover, random_bytes((cover.size() - kHeaderBits) / 8, prng_mix(master, i)),
                                 lsb::Method::lsb, k);
    const std::size_t cap = lsb::effective_capacity(cover, lsb::Method::improved, k);
    const auto imp = embed_fitting(cover, random_bytes((cap - kHeaderBits) / 8, prng_mix(master ^ 1, i)),
                                   lsb::Method::improved, k).result;
    const auto cc = analysis::chi_square_attack(cover);
    const auto ci = analysis::chi_square_attack(imp.stego);
    p_cover[i] = cc.p_value;
    p_lsb[i] = analysis::chi_square_attack(full.stego).p_value;
    identical[i] = cc.chi2 == ci.chi2 && cc.dof == ci.dof && cc.p_value == ci.p_value;
  });
  std::ostringstream csv;
  csv << "image,p_cover,p_full_lsb,improved_identical\n";
  std::size_t detected = 0;
  for (std::size_t i = 0; i < n; ++i) {
    detected += p_lsb[i] > 0.95;
    csv << corpus[i].name << ',' << p_cover[i] << ',' << p_lsb[i] << ',' << identical[i] << '\n';
  }
  tables["chi_square.csv"] = csv.str();
  CriterionResult c{9, "chi-square discrimination", false,
                    "full LSB p > 0.95 on >= 90% of corpus; improved chi-square identical to cover on all"};
  const auto same = static_cast<std::size_t>(std::count(identical.begin(), identical.end(), 1));
  c.add("images", static_cast<double>(n));
  c.add("full_lsb_detect_rate", static_cast<double>(detected) / static_cast<double>(n));
  c.add("improved_identical", static_cast<double>(same));
  c.pass = 10 * detected >= 9 * n && same == n;
  return c;
}

// --- ICA (10-11) -------------------------------------------------------------------

inline CriterionResult ica_separation(std::uint64_t master) {
  constexpr int kSeeds = 20;
  struct Run {
    double worst = 0.0, orth = 0.0, cov = 0.0;
  };
  // layout: [variant][contrast][n-2][dist][seed]
  const std::size_t total = 2 * 2 * 3 * 2 * kSeeds;
  std::vector<Run> runs(total);
  parallel_for(total, [&](std::size_t idx) {
    const std::size_t seed = idx % kSeeds;
    const bool laplace = (idx / kSeeds) % 2;
    const int n = static_cast<int>((idx / (2 * kSeeds)) % 3) + 2;
    const auto g = (idx / (6 * kSeeds)) % 2 ? ica::Contrast::gauss : ica::Contrast::quartic;
    const bool sym = idx / (12 * kSeeds);
    KeyedPrng p(prng_mix(master, (static_cast<std::uint64_t>(n) * 10 + laplace) * 1000 + seed));
    const Eigen::Index t = 5000;
    Eigen::MatrixXd s(n, t), a(n, n);
    for (Eigen::Index j = 0; j < t; ++j)
      for (int i = 0; i < n; ++i)
        s(i, j) = laplace ? p.laplace(1.0 / std::numbers::sqrt2) : (p.uniform() * 2.0 - 1.0) * std::numbers::sqrt3;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) a(i, j) = p.gaussian();
    const ica::Whitened wh = ica::center_whiten(a * s, n);
    ica::FastIcaOptions opt;
    opt.contrast = g;
    opt.seed = prng_mix(master ^ 0x1ca, seed);
    const auto w = sym ? ica::fastica_symmetric(wh.z, n, opt) : ica::fastica_deflation(wh.z, n, opt);
    const Eigen::MatrixXd y = w.w * wh.z;
    const auto best = ica::best_abs_correlations(s.transpose(), y.transpose());
    Run& r = runs[idx];
    r.worst = *std::min_element(best.begin(), best.end());
    r.orth = (w.w * w.w.transpose() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    r.cov = (ica::covariance(wh.z) - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  });
  CriterionResult c{10, "FastICA separation", false,
                    "worst source |corr| >= 0.95 in >= 90% of runs per variant and contrast; WW^T - I and Cov(Z) - I within 1e-6"};
  bool ok = true;
  double orth = 0.0, cov = 0.0;
  const std::size_t per = total / 4;
  for (std::size_t cfg = 0; cfg < 4; ++cfg) {
    std::size_t good = 0;
    for (std::size_t i = cfg * per; i < (cfg + 1) * per; ++i) {
      good += runs[i].worst >= 0.95;
      orth = std::max(orth, runs[i].orth);
      cov = std::max(cov, runs[i].cov);
    }
    const std::string name = std::string(cfg / 2 ? "symmetric_" : "deflation_") + (cfg % 2 ? "gauss" : "quartic");
    c.add(name + "_success_rate", static_cast<double>(good) / static_cast<double>(per));
    ok = ok && 10 * good >= 9 * per;
  }
  c.add("runs", static_cast<double>(total));
  c.add("max_orthonormality_error", orth);
  c.add("max_whitening_error", cov);
  c.pass = ok && orth <= 1e-6 && cov <= 1e-6;
  return c;
}

inline CriterionResult woa_replication(std::uint64_t master, std::size_t trials, Tables& tables) {
  constexpr Eigen::Index kNv = 512, kN0 = 1000, kNc = 2;
  const double alpha = std::sqrt(static_cast<double>(kNv) * std::pow(10.0, -2.1) / static_cast<double>(kNc));
  std::vector<std::array<double, 2 * kNc>> corr(trials);
  std::vector<std::array<double, 2>> wcr(trials);
  std::vector<int> conv(trials);
  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(trials, [&](std::size_t tr) {
    KeyedPrng p(prng_mix(master, tr));
    Eigen::MatrixXd x(kNv, kN0), b(kNc, kN0);
    for (Eigen::Index j = 0; j < kN0; ++j)
      for (Eigen::Index i = 0; i < kNv; ++i) x(i, j) = p.gaussian();
    for (Eigen::Index j = 0; j < kN0; ++j)
      for (Eigen::Index i = 0; i < kNc; ++i) b(i, j) = p.bit() ? 1.0 : -1.0;
    const Eigen::MatrixXd u = watermark::orthonormal_carriers(kNv, kNc, p.next());
    const Eigen::MatrixXd y_ss = watermark::ss_embed(x, u, b, alpha);
    const Eigen::MatrixXd y_iss = watermark::iss_embed(x, u, b, alpha, 0.5);
    wcr[tr] = {watermark::wcr_db(x, y_ss - x), watermark::wcr_db(x, y_iss - x)};
    const auto a_ss = watermark::woa_attack(y_ss, kNc, ica::Contrast::quartic, prng_mix(master ^ 0xa77, tr));
    const auto a_iss = watermark::woa_attack(y_iss, kNc, ica::Contrast::quartic, prng_mix(master ^ 0xa77, tr));
    const auto c_ss = ica::best_abs_correlations(u, a_ss.carriers);
    const auto c_iss = ica::best_abs_correlations(u, a_iss.carriers);
    for (Eigen::Index i = 0; i < kNc; ++i) {
      corr[tr][static_cast<std::size_t>(i)] = c_ss[static_cast<std::size_t>(i)];
      corr[tr][static_cast<std::size_t>(kNc + i)] = c_iss[static_cast<std::size_t>(i)];
    }
    conv[tr] = a_ss.converged && a_iss.converged;
  });
  const double secs = seconds_since(t0);
  std::vector<double> ss, iss;
  double wcr_ss = 0.0;
  std::ostringstream csv;
  csv << "trial,scheme,carrier,abs_correlation\n";
  for (std::size_t tr = 0; tr < trials; ++tr) {
    wcr_ss += wcr[tr][0] / static_cast<double>(trials);
    for (Eigen::Index i = 0; i < kNc; ++i) {
      ss.push_back(corr[tr][static_cast<std::size_t>(i)]);
      iss.push_back(corr[tr][static_cast<std::size_t>(kNc + i)]);
      csv << tr << ",ss," << i << ',' << ss.back() << '\n' << tr << ",iss," << i << ',' << iss.back() << '\n';
    }
  }
  tables["woa_scatter.csv"] = csv.str();
  CriterionResult c{11, "WOA attack replication", false, "median SS |corr| >= 0.9; median ISS < median SS; runtime < 600 s"};
  c.add("trials", static_cast<double>(trials));
  c.add("median_ss", median(ss));
  c.add("median_iss", median(iss));
  c.add("mean_wcr_db", wcr_ss);
  c.add("converged_trials", static_cast<double>(std::count(conv.begin(), conv.end(), 1)));
  c.add("runtime_s", secs);
  c.pass = trials >= 100 && median(ss) >= 0.9 && median(iss) < median(ss) && secs < 600.0;
  return c;
}

// --- QIM (12) ----------------------------------------------------------------------

inline CriterionResult qim_grid() {
  constexpr double kDeltas[] = {0.25, 1.0, 2.0, 3.7, 10.0};
  std::size_t points = 0, failures = 0;
  for (double delta : kDeltas)
    for (int j = -500; j < 500; ++j) {
      // even j: exact multiples of delta/2 (negative and positive); odd j:
      // interior points at irrational offsets
      const double x = j % 2 == 0 ? 0.5 * delta * j : 0.5 * delta * j + delta * (std::numbers::sqrt2 - 1.0) * 0.37;
      for (int m = 0; m < 2; ++m) {
        ++points;
        failures += watermark::nn_detect(watermark::quantize_embed(x, m, delta), delta) != m;
      }
    }
  CriterionResult c{12, "QIM exactness", false, "zero failures over 10^4 grid points"};
  c.add("points", static_cast<double>(points));
  c.add("failures", static_cast<double>(failures));
  c.pass = points >= 10000 && failures == 0;
  return c;
}

// --- determinism (13) ---------------------------------------------------------------

namespace detail {

inline int run(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

inline std::string quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace detail

/// Runs every CLI pipeline twice into separate directories and compares all
/// outputs byte for byte.
inline CriterionResult determinism(const BenchConfig& cfg, const std::vector<NamedImage>& corpus) {
  CriterionResult c{13, "determinism", false, "identical stego, key and report files across reruns"};
  if (cfg.cli_path.empty() || cfg.work_dir.empty()) {
    c.note = "no CLI binary given";
    return c;
  }
  namespace fs = std::filesystem;
  fs::create_directories(cfg.work_dir);
  const fs::path cover = cfg.work_dir / "cover.pgm", msg = cfg.work_dir / "message.bin";
  imageio::save_pgm(cover, find_image(corpus, "camera"));
  imageio::write_file(msg, random_bytes(24, cfg.seed));
  const std::string keys = " --key1 0123456789abcdef --key2 fedcba9876543210 --key3 00ff00ff00ff00ff";
  const std::vector<std::pair<std::string, std::string>> methods = {
      {"lsb", keys}, {"lsbplus", keys}, {"lsbplus-improved", keys},
      {"sparse", " --seed " + std::to_string(cfg.seed)}, {"ica-qim", " --seed " + std::to_string(cfg.seed)}};
  std::size_t compared = 0, identical = 0, failed_runs = 0;
  for (const auto& [m, extra] : methods) {
    std::vector<std::vector<std::uint8_t>> files[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path d = cfg.work_dir / (m + "_" + std::to_string(rep));
      fs::remove_all(d);
      fs::create_directories(d);
      std::string cmd = detail::quote(cfg.cli_path) + " embed --method " + m + " --cover " + detail::quote(cover) +
                        " --message " + detail::quote(msg) + " --out " + detail::quote(d / "stego.pgm") +
                        " --report " + detail::quote(d / "report.json") + extra;
      if (m == "sparse" || m == "ica-qim") cmd += " --key-out " + detail::quote(d / "key.bin");
      if (m == "sparse") cmd += " --oracle-code " + detail::quote(d / "code.bin");
      failed_runs += detail::run(cmd) != 0;
      for (const auto& e : fs::directory_iterator(d))
        files[rep].push_back(imageio::read_file(e.path()));
    }
    // directory iteration order is unspecified; compare sorted contents
    for (auto& f : files) std::sort(f.begin(), f.end());
    compared += files[0].size();
    for (std::size_t i = 0; i < std::min(files[0].size(), files[1].size()); ++i) identical += files[0][i] == files[1][i];
    if (files[0].size() != files[1].size()) ++failed_runs;
  }
  c.add("files_compared", static_cast<double>(compared));
  c.add("files_identical", static_cast<double>(identical));
  c.add("failed_runs", static_cast<double>(failed_runs));
  c.pass = failed_runs == 0 && compared > 0 && identical == compared;
  return c;
}

// --- suite ----------------------------------------------------------------------------

struct SuiteOptions {
  std::size_t sparse_trials = 100;
  std::size_t lsb_trials = 500;
  std::size_t woa_trials = 100;
};

/// Suite names: sparse (1-4), lsb-compare (5-8), chi-square (9), ica (10),
/// woa (11), qim (12), determinism (13), all.
inline std::vector<CriterionResult> run_suite(const std::vector<std::string>& suites, const BenchConfig& cfg,
                                              Tables& tables, const SuiteOptions& opt = {},
                                              const std::function<void(const CriterionResult&)>& on_result = {}) {
  const auto want = [&](const char* s) {
    return suites.empty() || std::find(suites.begin(), suites.end(), "all") != suites.end() ||
           std::find(suites.begin(), suites.end(), s) != suites.end();
  };
  std::vector<CriterionResult> out;
  const auto push = [&](CriterionResult r) {
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  };
  const std::uint64_t s = cfg.seed;
  std::vector<NamedImage> corpus;
  if (want("sparse") || want("lsb-compare") || want("chi-square") || want("determinism"))
    corpus = load_corpus(cfg.corpus_dir);
  if (want("sparse")) {
    for (auto& r : sparse_capacity_and_psnr(corpus, prng_mix(s, 1))) push(std::move(r));
    push(sparse_oracle_roundtrip(corpus, prng_mix(s, 3), opt.sparse_trials, tables));
    push(sparse_noise(corpus, prng_mix(s, 4), tables));
  }
  if (want("lsb-compare")) {
    for (auto& r : lsb_properties(prng_mix(s, 5), opt.lsb_trials)) push(std::move(r));
    for (auto& r : lsb_corpus(corpus, prng_mix(s, 7), tables)) push(std::move(r));
  }
  if (want("chi-square")) push(chi_square(corpus, prng_mix(s, 9), tables));
  if (want("ica")) push(ica_separation(prng_mix(s, 10)));
  if (want("woa")) push(woa_replication(prng_mix(s, 11), opt.woa_trials, tables));
  if (want("qim")) push(qim_grid());
  if (want("determinism")) push(determinism(cfg, corpus));
  return out;
}

inline std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.title << "):";
  for (const auto& [k, v] : r.metrics) os << ' ' << k << '=' << v;
  os << " | threshold: " << r.threshold;
  if (!r.note.empty()) os << " | " << r.note;
  return os.str();
}

}  // namespace stegolab::bench
