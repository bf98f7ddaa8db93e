#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "stegolab/bench.hpp"
#include "stegolab/ica_watermark.hpp"
#include "stegolab/lsb_stego.hpp"
#include "stegolab/sparse_stego.hpp"

namespace fs = std::filesystem;
using namespace stegolab;
using imageio::GrayImage;

namespace {

const std::string kKeys = " --key1 0123456789abcdef --key2 fedcba9876543210 --key3 00ff00ff00ff00ff";
const lsb::KeySet kKeySet{0x0123456789abcdefULL, 0xfedcba9876543210ULL, 0x00ff00ff00ff00ffULL};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("stegolab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    cover_ = std::string(STEGOLAB_CORPUS_DIR) + "/camera.pgm";
    msg_ = bench::random_bytes(24, 77);
    imageio::write_file(path("m.bin"), msg_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) const {
    const int st = std::system((std::string(STEGOLAB_CLI_PATH) + " " + args + " >" + path("stdout.txt") + " 2>" +
                                path("stderr.txt"))
                                   .c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }

  std::string stdout_text() const {
    const auto b = imageio::read_file(path("stdout.txt"));
    return {b.begin(), b.end()};
  }

  std::string embed_args(const std::string& method, const std::string& out) const {
    return "embed --method " + method + " --cover " + cover_ + " --message " + path("m.bin") + " --out " + path(out);
  }

  fs::path dir_;
  std::string cover_;
  Bytes msg_;
};

}  // namespace

TEST_F(Cli, LsbFamilyRoundTripMatchesLibrary) {
  const GrayImage cover = imageio::load_pgm(cover_);
  for (const auto& [name, m] : {std::pair{"lsb", lsb::Method::lsb}, std::pair{"lsbplus", lsb::Method::lsbplus},
                                std::pair{"lsbplus-improved", lsb::Method::improved}}) {
    ASSERT_EQ(run(embed_args(name, "s.pgm") + kKeys), 0) << name;
    ASSERT_EQ(run(std::string("extract --method ") + name + " --stego " + path("s.pgm") + " --out " + path("o.bin") + kKeys), 0);
    EXPECT_EQ(imageio::read_file(path("o.bin")), msg_) << name;
    EXPECT_EQ(imageio::load_pgm(path("s.pgm")), lsb::embed(cover, msg_, m, kKeySet).stego) << name;
  }
}

TEST_F(Cli, SparseReportsCapacityAndOracleRoundTrip) {
  ASSERT_EQ(run(embed_args("sparse", "s.pgm") + " --seed 3 --key-out " + path("d.bin") + " --oracle-code " +
                path("c.bin") + " --report " + path("r.json")),
            0);
  const auto rep = imageio::read_file(path("r.json"));
  const std::string text(rep.begin(), rep.end());
  EXPECT_NE(text.find("\"capacity_bits\": 31744"), std::string::npos);
  EXPECT_NE(text.find("\"theoretical_bits\": 32768"), std::string::npos);
  ASSERT_EQ(run("extract --method sparse --stego " + path("s.pgm") + " --key " + path("d.bin") + " --oracle-code " +
                path("c.bin") + " --out " + path("o.bin")),
            0);
  EXPECT_EQ(imageio::read_file(path("o.bin")), msg_);

  sparse::SparseStegoParams p;
  p.seed = 3;
  const auto lib = sparse::sparse_embed(imageio::load_pgm(cover_), msg_, p);
  EXPECT_EQ(imageio::load_pgm(path("s.pgm")), lib.stego);
  EXPECT_EQ(imageio::read_file(path("d.bin")), sparse::write_dictionary(lib.key));
}

TEST_F(Cli, IcaQimRoundTrip) {
  ASSERT_EQ(run(embed_args("ica-qim", "s.pgm") + " --key-out " + path("b.bin")), 0);
  ASSERT_EQ(run("extract --method ica-qim --stego " + path("s.pgm") + " --key " + path("b.bin") + " --out " + path("o.bin")), 0);
  EXPECT_EQ(imageio::read_file(path("o.bin")), msg_);
}

TEST_F(Cli, ExitCodes) {
  // missing key
  EXPECT_EQ(run(embed_args("lsbplus-improved", "s.pgm") + " --key1 0123456789abcdef --key3 00ff00ff00ff00ff"), 64);
  // malformed key, unknown method, missing key file
  EXPECT_EQ(run(embed_args("lsb", "s.pgm") + " --key3 xyz"), 64);
  EXPECT_EQ(run(embed_args("nope", "s.pgm") + kKeys), 64);
  EXPECT_EQ(run(embed_args("sparse", "s.pgm")), 64);
  EXPECT_EQ(run("frobnicate"), 64);
  // capacity: the report carries the capacity
  imageio::write_file(path("big.bin"), Bytes(9000, 1));
  EXPECT_EQ(run("embed --method lsbplus --cover " + cover_ + " --message " + path("big.bin") + " --out " +
                path("s.pgm") + kKeys),
            2);
  EXPECT_NE(stdout_text().find("\"capacity_bits\""), std::string::npos);
  // wrong keys
  ASSERT_EQ(run(embed_args("lsbplus-improved", "s.pgm") + kKeys), 0);
  EXPECT_EQ(run("extract --method lsbplus-improved --stego " + path("s.pgm") + " --out " + path("o.bin") +
                " --key1 1111111111111111 --key2 fedcba9876543210 --key3 00ff00ff00ff00ff"),
            3);
  // truncated stego and missing files
  const auto bytes = imageio::read_file(path("s.pgm"));
  imageio::write_file(path("t.pgm"), std::span(bytes).first(1000));
  EXPECT_EQ(run("extract --method lsb --stego " + path("t.pgm") + " --out " + path("o.bin") + kKeys), 1);
  EXPECT_EQ(run("extract --method lsb --stego " + path("absent.pgm") + " --out " + path("o.bin") + kKeys), 1);
}

TEST_F(Cli, RerunsAreBitIdentical) {
  for (const std::string m : {"lsbplus-improved", "sparse", "ica-qim"}) {
    for (int rep = 0; rep < 2; ++rep) {
      const std::string tag = std::to_string(rep);
      ASSERT_EQ(run(embed_args(m, "s" + tag + ".pgm") + kKeys + " --seed 9 --key-out " + path("k" + tag + ".bin") +
                    " --report " + path("r" + tag + ".json")),
                0)
          << m;
    }
    EXPECT_EQ(imageio::read_file(path("s0.pgm")), imageio::read_file(path("s1.pgm"))) << m;
    EXPECT_EQ(imageio::read_file(path("r0.json")), imageio::read_file(path("r1.json"))) << m;
    if (m != "lsbplus-improved") EXPECT_EQ(imageio::read_file(path("k0.bin")), imageio::read_file(path("k1.bin"))) << m;
  }
}

TEST_F(Cli, AnalyzeHistogramsChiSquareAndCooccurrence) {
  ASSERT_EQ(run(embed_args("lsbplus-improved", "s.pgm") + kKeys), 0);
  ASSERT_EQ(run("analyze " + path("s.pgm") + " --reference " + cover_ + " --cooccurrence 1,0 --csv-out " +
                path("co.csv")),
            0);
  EXPECT_NE(stdout_text().find("\"histogram_identical\": true"), std::string::npos);

  const auto csv = imageio::read_file(path("co.csv"));
  std::uint64_t total = 0, cur = 0;
  std::size_t rows = 0;
  for (std::uint8_t ch : csv) {
    if (ch == ',' || ch == '\n') {
      total += cur;
      cur = 0;
      rows += ch == '\n';
    } else {
      cur = cur * 10 + (ch - '0');
    }
  }
  EXPECT_EQ(rows, 256u);
  EXPECT_EQ(total, 255u * 256u);

  // full-capacity plain LSB is flagged by the chi-square attack
  const GrayImage cover = imageio::load_pgm(cover_);
  imageio::write_file(path("full.bin"), bench::random_bytes((cover.size() - kHeaderBits) / 8, 5));
  ASSERT_EQ(run("embed --method lsb --cover " + cover_ + " --message " + path("full.bin") + " --out " + path("f.pgm") + kKeys), 0);
  ASSERT_EQ(run("analyze " + path("f.pgm") + " --report " + path("a.json")), 0);
  const GrayImage full = imageio::load_pgm(path("f.pgm"));
  EXPECT_GT(analysis::chi_square_attack(full).p_value, 0.95);
  const auto a = imageio::read_file(path("a.json"));
  EXPECT_NE(std::string(a.begin(), a.end()).find("\"p_value\""), std::string::npos);

  EXPECT_EQ(run("analyze " + path("s.pgm") + " --cooccurrence 1,0"), 64);
}
