// stegolab: embed, extract, analyze, bench.
//
// Exit codes: 0 ok, 1 I/O or parse error, 2 capacity exceeded, 3 corrupt
// stream or wrong keys, 64 usage error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "stegolab/bench.hpp"
#include "stegolab/ica_watermark.hpp"
#include "stegolab/lsb_stego.hpp"
#include "stegolab/sparse_stego.hpp"
#include "stegolab/steganalysis.hpp"

#ifndef STEGOLAB_CORPUS_DIR
#define STEGOLAB_CORPUS_DIR "data/corpus"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace stegolab;
using imageio::GrayImage;

namespace {

enum Exit { kOk = 0, kIo = 1, kCapacity = 2, kCorrupt = 3, kUsage = 64 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_for(Errc c) {
  switch (c) {
    case Errc::capacity_exceeded: return kCapacity;
    case Errc::corrupt_stream:
    case Errc::truncated_stream: return kCorrupt;
    case Errc::invalid_argument: return kUsage;
    default: return kIo;
  }
}

// Infinite PSNR (identical images) is written as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void emit(const json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  imageio::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

struct Common {
  std::string method;
  std::string key1, key2, key3;
  std::uint64_t seed = 0;
  std::string report;
  std::string key_file;
  std::string oracle_code;
  double delta = 0.0;
  std::size_t block_side = 0;  // 0: method default
  int atoms = 129;
  int sparsity = 31;
  int ksvd_iters = 10;
  int components = 32;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--method", c.method, "lsb | lsbplus | lsbplus-improved | sparse | ica-qim")
      ->required()
      ->check(CLI::IsMember({"lsb", "lsbplus", "lsbplus-improved", "sparse", "ica-qim"}));
  cmd->add_option("--key1", c.key1, "message encryption key (16 hex digits)");
  cmd->add_option("--key2", c.key2, "lock priority key (16 hex digits)");
  cmd->add_option("--key3", c.key3, "traversal order key (16 hex digits)");
  cmd->add_option("--seed", c.seed, "seed for dictionary or basis learning");
  cmd->add_option("--report", c.report, "write the JSON report here instead of stdout");
  cmd->add_option("--oracle-code", c.oracle_code, "sparse: stored modified code (SCODE1)");
  cmd->add_option("--delta", c.delta, "ica-qim: quantization step, 0 chooses one for PSNR >= 40 dB");
  cmd->add_option("--block-side", c.block_side, "block side (sparse 8, ica-qim 16)");
  cmd->add_option("--atoms", c.atoms, "sparse: dictionary size")->check(CLI::PositiveNumber);
  cmd->add_option("--sparsity", c.sparsity, "sparse: nonzeros per block")->check(CLI::PositiveNumber);
  cmd->add_option("--ksvd-iters", c.ksvd_iters, "sparse: K-SVD sweeps")->check(CLI::NonNegativeNumber);
  cmd->add_option("--components", c.components, "ica-qim: ICA components")->check(CLI::PositiveNumber);
}

std::optional<lsb::Method> lsb_method(const std::string& m) {
  if (m == "lsb") return lsb::Method::lsb;
  if (m == "lsbplus") return lsb::Method::lsbplus;
  if (m == "lsbplus-improved") return lsb::Method::improved;
  return std::nullopt;
}

std::uint64_t required_key(const std::string& text, const char* name, const std::string& method) {
  if (text.empty()) throw UsageError(std::string("--") + name + " is required for --method " + method);
  try {
    return parse_hex_key(text);
  } catch (const Error& e) {
    throw UsageError(std::string("--") + name + ": " + e.what());
  }
}

lsb::KeySet lsb_keys(const Common& c, lsb::Method m) {
  lsb::KeySet k;
  k.key3 = required_key(c.key3, "key3", c.method);
  if (m != lsb::Method::lsb) k.key1 = required_key(c.key1, "key1", c.method);
  if (m == lsb::Method::improved) k.key2 = required_key(c.key2, "key2", c.method);
  return k;
}

sparse::SparseStegoParams sparse_params(const Common& c) {
  sparse::SparseStegoParams p;
  if (c.block_side) p.block_side = c.block_side;
  p.atom_count = c.atoms;
  p.sparsity = c.sparsity;
  p.ksvd_iters = c.ksvd_iters;
  p.seed = c.seed;
  return p;
}

// --- embed ---------------------------------------------------------------------------

struct EmbedArgs {
  Common c;
  std::string cover, message, out, key_out;
};

int cmd_embed(const EmbedArgs& a) {
  const GrayImage cover = imageio::load_pgm(a.cover);
  const Bytes msg = imageio::read_file(a.message);
  json rep;
  rep["method"] = a.c.method;

  if (const auto m = lsb_method(a.c.method)) {
    const lsb::KeySet keys = lsb_keys(a.c, *m);
    try {
      const auto r = lsb::embed(cover, msg, *m, keys);
      imageio::save_pgm(a.out, r.stego);
      rep["capacity_bits"] = r.report.capacity_bits;
      rep["used_bits"] = r.report.used_bits;
      rep["intentional_count"] = r.report.intentional_count;
      rep["intentional_flips"] = r.report.intentional_flips;
      rep["psnr_db"] = number(r.report.psnr_db);
      rep["hist_change"] = r.report.hist_change;
    } catch (const Error& e) {
      if (e.code() != Errc::capacity_exceeded) throw;
      rep["error"] = errc_name(e.code());
      rep["message"] = e.what();
      rep["capacity_bits"] = e.capacity() ? *e.capacity() : lsb::effective_capacity(cover, *m, keys);
      rep["requested_bits"] = kHeaderBits + 8 * msg.size();
      emit(rep, a.c.report);
      std::cerr << "stegolab: " << e.what() << "\n";
      return kCapacity;
    }
  } else {
    if (a.key_out.empty()) throw UsageError("--key-out is required for --method " + a.c.method);
    try {
      if (a.c.method == "sparse") {
        const auto p = sparse_params(a.c);
        const auto r = sparse::sparse_embed(cover, msg, p);
        imageio::save_pgm(a.out, r.stego);
        imageio::write_file(a.key_out, sparse::write_dictionary(r.key));
        if (!a.c.oracle_code.empty()) imageio::write_file(a.c.oracle_code, sparse::write_sparse_code(r.modified_code));
        rep["capacity_bits"] = r.report.capacity_bits;
        rep["theoretical_bits"] = r.report.theoretical_bits;
        rep["nnz"] = r.report.nnz;
        rep["used_bits"] = r.report.used_bits;
        rep["psnr_db"] = number(r.report.psnr_db);
        rep["ksvd_objective"] = r.report.ksvd_objective;
        rep["block_side"] = p.block_side;
        rep["atoms"] = p.atom_count;
        rep["sparsity"] = p.sparsity;
        rep["seed"] = p.seed;
      } else {
        watermark::BasisOptions opt;
        if (a.c.block_side) opt.block_side = a.c.block_side;
        opt.n_components = a.c.components;
        opt.seed = a.c.seed;
        const auto r = watermark::qim_embed_message(cover, msg, a.c.delta, opt);
        imageio::save_pgm(a.out, r.stego);
        imageio::write_file(a.key_out, watermark::write_basis(r.key));
        rep["capacity_bits"] = r.capacity_bits;
        rep["used_bits"] = kHeaderBits + 8 * msg.size();
        rep["psnr_db"] = number(r.psnr_db);
        rep["delta"] = r.key.delta;
        rep["component"] = r.key.index;
        rep["block_side"] = r.key.block_side;
        rep["seed"] = opt.seed;
      }
    } catch (const Error& e) {
      if (e.code() != Errc::capacity_exceeded) throw;
      rep["error"] = errc_name(e.code());
      rep["message"] = e.what();
      if (e.capacity()) rep["capacity_bits"] = *e.capacity();
      rep["requested_bits"] = kHeaderBits + 8 * msg.size();
      emit(rep, a.c.report);
      std::cerr << "stegolab: " << e.what() << "\n";
      return kCapacity;
    }
  }
  emit(rep, a.c.report);
  return kOk;
}

// --- extract --------------------------------------------------------------------------

struct ExtractArgs {
  Common c;
  std::string stego, out;
};

int cmd_extract(const ExtractArgs& a) {
  const GrayImage stego = imageio::load_pgm(a.stego);
  json rep;
  rep["method"] = a.c.method;
  Bytes msg;
  if (const auto m = lsb_method(a.c.method)) {
    msg = lsb::extract(stego, *m, lsb_keys(a.c, *m));
  } else {
    if (a.c.key_file.empty()) throw UsageError("--key is required for --method " + a.c.method);
    const auto key_bytes = imageio::read_file(a.c.key_file);
    if (a.c.method == "sparse") {
      const sparse::Dictionary dict = sparse::read_dictionary(key_bytes);
      auto p = sparse_params(a.c);
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dict.atom_dim()))));
      if (side * side != static_cast<std::size_t>(dict.atom_dim()))
        fail(Errc::bad_header, "dictionary atoms are not square blocks");
      p.block_side = side;
      p.atom_count = static_cast<int>(dict.atom_count());
      std::optional<sparse::SparseCode> oracle;
      if (!a.c.oracle_code.empty()) oracle = sparse::read_sparse_code(imageio::read_file(a.c.oracle_code));
      msg = sparse::sparse_extract(stego, dict, p, oracle ? &*oracle : nullptr);
      rep["mode"] = oracle ? "oracle" : "blind";
    } else {
      msg = watermark::qim_extract_message(stego, watermark::read_basis(key_bytes));
    }
  }
  imageio::write_file(a.out, msg);
  rep["message_bytes"] = msg.size();
  emit(rep, a.c.report);
  return kOk;
}

// --- analyze --------------------------------------------------------------------------

struct AnalyzeArgs {
  std::vector<std::string> images;
  std::string reference, cooccurrence, csv_out, report;
};

std::pair<int, int> parse_offset(const std::string& s) {
  int dx = 0, dy = 0;
  char comma = 0, extra = 0;
  if (std::sscanf(s.c_str(), "%d%c%d%c", &dx, &comma, &dy, &extra) != 3 || comma != ',')
    throw UsageError("--cooccurrence expects dx,dy");
  return {dx, dy};
}

json histogram_json(const analysis::Histogram& h) {
  std::size_t lo = 256, hi = 0, distinct = 0;
  double total = 0.0, sum = 0.0;
  for (std::size_t v = 0; v < 256; ++v) {
    if (!h[v]) continue;
    lo = std::min(lo, v);
    hi = v;
    ++distinct;
    total += static_cast<double>(h[v]);
    sum += static_cast<double>(v) * static_cast<double>(h[v]);
  }
  json j;
  j["min"] = lo;
  j["max"] = hi;
  j["mean"] = total > 0 ? sum / total : 0.0;
  j["distinct_values"] = distinct;
  j["counts"] = h;
  return j;
}

int cmd_analyze(const AnalyzeArgs& a) {
  std::optional<std::pair<int, int>> offset;
  if (!a.cooccurrence.empty()) {
    offset = parse_offset(a.cooccurrence);
    if (a.csv_out.empty()) throw UsageError("--cooccurrence needs --csv-out");
  }
  std::optional<GrayImage> ref;
  if (!a.reference.empty()) ref = imageio::load_pgm(a.reference);
  json rep;
  rep["images"] = json::array();
  for (std::size_t idx = 0; idx < a.images.size(); ++idx) {
    const GrayImage img = imageio::load_pgm(a.images[idx]);
    const auto h = analysis::histogram(img);
    const auto chi = analysis::chi_square_attack(h);
    json j;
    j["path"] = a.images[idx];
    j["width"] = img.width;
    j["height"] = img.height;
    j["histogram"] = histogram_json(h);
    j["hist_change"] = analysis::hist_change(h);
    j["chi_square"] = {{"chi2", chi.chi2}, {"dof", chi.dof}, {"p_value", chi.p_value}};
    if (ref) {
      j["psnr_db"] = number(analysis::psnr(*ref, img));
      j["histogram_identical"] = analysis::histogram(*ref) == h;
      const auto [dx, dy] = offset.value_or(std::pair{1, 0});
      j["cooccurrence_change"] = analysis::cooccurrence_change(*ref, img, dx, dy);
    }
    if (offset && idx == 0) {
      const auto co = analysis::cooccurrence(img, offset->first, offset->second);
      std::string csv;
      for (int r = 0; r < 256; ++r) {
        for (int c = 0; c < 256; ++c) {
          if (c) csv += ',';
          csv += std::to_string(co.at(r, c));
        }
        csv += '\n';
      }
      imageio::write_file(a.csv_out, std::vector<std::uint8_t>(csv.begin(), csv.end()));
      j["cooccurrence"] = {{"dx", offset->first}, {"dy", offset->second}, {"total", co.total()}, {"csv", a.csv_out}};
    }
    rep["images"].push_back(std::move(j));
  }
  emit(rep, a.report);
  return kOk;
}

// --- bench ----------------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::string> suites;
  std::string corpus = STEGOLAB_CORPUS_DIR, out = "bench_out";
  std::uint64_t seed = 2024;
  std::size_t sparse_trials = 100, lsb_trials = 500, woa_trials = 100;
};

int cmd_bench(const BenchArgs& a) {
  bench::BenchConfig cfg;
  cfg.corpus_dir = a.corpus;
  cfg.seed = a.seed;
  cfg.cli_path = fs::read_symlink("/proc/self/exe");
  cfg.work_dir = fs::path(a.out) / "determinism";
  fs::create_directories(a.out);
  bench::SuiteOptions opt{a.sparse_trials, a.lsb_trials, a.woa_trials};
  bench::Tables tables;
  const auto results = bench::run_suite(a.suites, cfg, tables, opt, [](const bench::CriterionResult& r) {
    std::cout << bench::format_line(r) << std::endl;
  });
  // timings go to stdout only so the files are reproducible
  json rep;
  rep["seed"] = a.seed;
  rep["criteria"] = json::array();
  for (const auto& r : results) {
    json m = json::object();
    for (const auto& [k, v] : r.metrics)
      if (k != "runtime_s") m[k] = number(v);
    rep["criteria"].push_back(
        {{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"threshold", r.threshold}, {"metrics", m}, {"note", r.note}});
  }
  emit(rep, (fs::path(a.out) / "results.json").string());
  for (const auto& [name, csv] : tables)
    imageio::write_file(fs::path(a.out) / name, std::vector<std::uint8_t>(csv.begin(), csv.end()));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stegolab: sparse, histogram-preserving LSB and ICA steganography"};
  app.require_subcommand(1);

  EmbedArgs ea;
  auto* embed = app.add_subcommand("embed", "hide a message file in a cover PGM");
  add_common(embed, ea.c);
  embed->add_option("--cover", ea.cover)->required();
  embed->add_option("--message", ea.message)->required();
  embed->add_option("--out", ea.out, "stego PGM")->required();
  embed->add_option("--key-out", ea.key_out, "sparse: dictionary (SDICT1); ica-qim: basis (ICAB1)");

  ExtractArgs xa;
  auto* extract = app.add_subcommand("extract", "recover a message from a stego PGM");
  add_common(extract, xa.c);
  extract->add_option("--stego", xa.stego)->required();
  extract->add_option("--out", xa.out, "recovered message file")->required();
  extract->add_option("--key", xa.c.key_file, "sparse: dictionary; ica-qim: basis");

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "histogram, chi-square and distortion statistics");
  analyze->add_option("images", aa.images)->required();
  analyze->add_option("--reference", aa.reference, "cover to compare against");
  analyze->add_option("--cooccurrence", aa.cooccurrence, "dx,dy offset for the co-occurrence dump");
  analyze->add_option("--csv-out", aa.csv_out, "256x256 co-occurrence CSV of the first image");
  analyze->add_option("--report", aa.report);

  BenchArgs ba;
  auto* benchc = app.add_subcommand("bench", "run the experiment suite");
  benchc->add_option("suites", ba.suites, "all | sparse | lsb-compare | chi-square | ica | woa | qim | determinism")
      ->check(CLI::IsMember({"all", "sparse", "lsb-compare", "chi-square", "ica", "woa", "qim", "determinism"}));
  benchc->add_option("--corpus", ba.corpus);
  benchc->add_option("--out", ba.out);
  benchc->add_option("--seed", ba.seed);
  benchc->add_option("--sparse-trials", ba.sparse_trials)->check(CLI::PositiveNumber);
  benchc->add_option("--lsb-trials", ba.lsb_trials)->check(CLI::PositiveNumber);
  benchc->add_option("--woa-trials", ba.woa_trials)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*embed) return cmd_embed(ea);
    if (*extract) return cmd_extract(xa);
    if (*analyze) return cmd_analyze(aa);
    if (*benchc) return cmd_bench(ba);
  } catch (const UsageError& e) {
    std::cerr << "stegolab: usage: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "stegolab: " << e.what() << "\n";
    return exit_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "stegolab: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}
