#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fpan/formats.hpp"
#include "fpan/oracle.hpp"
#include "fpan/systolic.hpp"

using namespace fpan;

namespace {

const FloatFormat kBf16 = FloatFormat::bf16();

ArrayConfig accurate_cfg(int rows = 8, int cols = 8) {
  return ArrayConfig{rows, cols, PEConfig::accurate(kBf16)};
}

MatrixF random_matrix(int rows, int cols, std::mt19937_64& rng, int exp_span = 6) {
  MatrixF m(rows, cols, kBf16);
  for (auto& bits : m.data) {
    const uint32_t sign = static_cast<uint32_t>(rng() & 1) << 15;
    const uint32_t exp = static_cast<uint32_t>(127 - exp_span + rng() % (2 * exp_span));
    const uint32_t man = static_cast<uint32_t>(rng() & 0x7F);
    bits = sign | (exp << 7) | man;
  }
  return m;
}

MatrixF identity(int n) {
  MatrixF m(n, n, kBf16);
  for (int i = 0; i < n; ++i) m.at(i, i) = 0x3F80;
  return m;
}

}  // namespace

TEST_CASE("south_round basics") {
  InternalSum one{FpClass::Normal, +1, 0, 0x8000};
  CHECK(south_round(one, kBf16) == 0x3F80);

  // un-normalized sum representing 0.5 at exponent 0: renormalization
  // recovers the value
  InternalSum half{FpClass::Normal, +1, 0, 0x4000};
  CHECK(south_round(half, kBf16) == 0x3F00);

  CHECK(south_round(InternalSum::zero(), kBf16) == 0x0000);
  CHECK(south_round(InternalSum::inf(-1), kBf16) == 0xFF80);
  CHECK(south_round(InternalSum::nan(), kBf16) == 0x7FC0);
}

TEST_CASE("south_round matches the dyadic rounding oracle, exhaustive significands") {
  for (uint64_t sig = 0; sig < 0x10000; ++sig) {
    for (int exp : {0, -3, 10}) {
      InternalSum s{FpClass::Normal, +1, exp, sig};
      const uint32_t got = south_round(s, kBf16);
      uint32_t want;
      if (sig == 0) {
        want = 0x0000;
      } else {
        const ExactDyadic x = ExactDyadic::make(+1, BigInt(sig), exp - 15);
        want = encode(round_exact(x, kBf16), kBf16);
      }
      REQUIRE(got == want);
    }
  }
}

TEST_CASE("identity matmul reproduces the weights") {
  std::mt19937_64 rng(21);
  const MatrixF w = random_matrix(4, 4, rng);
  const MatmulReport rep = matmul(identity(4), w, accurate_cfg(4, 4));
  CHECK(rep.output.data == w.data);
}

TEST_CASE("1x1 matmul equals a single south-rounded FMA") {
  MatrixF x(1, 1, kBf16), w(1, 1, kBf16);
  x.at(0, 0) = 0x3FC0;  // 1.5
  w.at(0, 0) = 0xC040;  // -3.0
  const MatmulReport rep = matmul(x, w, accurate_cfg(1, 1));
  const auto fma = pe_fma(decode(0x3FC0, kBf16), decode(0xC040, kBf16),
                          InternalSum::zero(), PEConfig::accurate(kBf16));
  CHECK(rep.output.at(0, 0) == south_round(fma.first, kBf16));
}

TEST_CASE("accurate matmul matches the exact replay fold, random 8x8") {
  std::mt19937_64 rng(23);
  const MatrixF x = random_matrix(8, 8, rng);
  const MatrixF w = random_matrix(8, 8, rng);
  const MatmulReport rep = matmul(x, w, accurate_cfg());

  std::vector<FpValue> row(8), col(8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      for (int t = 0; t < 8; ++t) {
        row[t] = decode(x.at(i, t), kBf16);
        col[t] = decode(w.at(t, j), kBf16);
      }
      REQUIRE(rep.output.at(i, j) == oracle::replay_fold(row, col, kBf16));
    }
  }
}

TEST_CASE("K=1 accurate matmul equals the rounded exact product") {
  std::mt19937_64 rng(29);
  const MatrixF x = random_matrix(6, 1, rng);
  const MatrixF w = random_matrix(1, 6, rng);
  const MatmulReport rep = matmul(x, w, accurate_cfg(1, 6));
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const ExactDyadic p =
          to_exact(decode(x.at(i, 0), kBf16)) * to_exact(decode(w.at(0, j), kBf16));
      REQUIRE(rep.output.at(i, j) == encode(round_exact(p, kBf16), kBf16));
    }
  }
}

TEST_CASE("tiling transparency: tile height does not change bits") {
  std::mt19937_64 rng(31);
  const MatrixF x = random_matrix(8, 24, rng);
  const MatrixF w = random_matrix(24, 8, rng);
  const MatmulReport base = matmul(x, w, accurate_cfg(24, 8));
  for (int rows : {1, 3, 4, 8, 16}) {
    const MatmulReport tiled = matmul(x, w, accurate_cfg(rows, 8));
    REQUIRE(tiled.output.data == base.output.data);
  }
  // approximate mode tiles identically
  const ArrayConfig ap{5, 8, PEConfig::approx(kBf16, 1, 2)};
  const ArrayConfig ap_full{24, 8, PEConfig::approx(kBf16, 1, 2)};
  CHECK(matmul(x, w, ap).output.data == matmul(x, w, ap_full).output.data);
}

TEST_CASE("column independence: permuting weight columns permutes outputs") {
  std::mt19937_64 rng(37);
  const MatrixF x = random_matrix(5, 7, rng);
  MatrixF w = random_matrix(7, 4, rng);
  const MatmulReport base = matmul(x, w, accurate_cfg(7, 4));

  const int perm[4] = {2, 0, 3, 1};
  MatrixF wp(7, 4, kBf16);
  for (int t = 0; t < 7; ++t)
    for (int j = 0; j < 4; ++j) wp.at(t, j) = w.at(t, perm[j]);
  const MatmulReport permuted = matmul(x, wp, accurate_cfg(7, 4));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j)
      REQUIRE(permuted.output.at(i, j) == base.output.at(i, perm[j]));
}

TEST_CASE("matmul error reporting") {
  std::mt19937_64 rng(41);
  const MatrixF x = random_matrix(3, 4, rng);
  const MatrixF w = random_matrix(5, 3, rng);
  CHECK_THROWS_AS(matmul(x, w, accurate_cfg()), std::invalid_argument);

  MatrixF bad = random_matrix(4, 4, rng);
  bad.at(2, 1) = 0x12345;  // exceeds 16 bits
  try {
    matmul(x, bad, accurate_cfg());
    FAIL("expected domain_error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    CHECK(std::string(e.what()).find("col 1") != std::string::npos);
  }
}

TEST_CASE("special values flow through matmul") {
  MatrixF x(1, 2, kBf16), w(2, 1, kBf16);
  x.at(0, 0) = 0x7F80;  // +Inf
  x.at(0, 1) = 0x3F80;
  w.at(0, 0) = 0x3F80;
  w.at(1, 0) = 0x3F80;
  CHECK(matmul(x, w, accurate_cfg(2, 1)).output.at(0, 0) == 0x7F80);

  x.at(0, 1) = 0xFF80;  // +Inf * 1 + (-Inf) * 1 -> NaN
  CHECK(matmul(x, w, accurate_cfg(2, 1)).output.at(0, 0) == 0x7FC0);
}

TEST_CASE("attention workload shapes and determinism") {
  const ArrayConfig cfg{16, 16, PEConfig::accurate(kBf16)};
  const auto r1 = attention_workload(16, 32, 99, cfg, true);
  REQUIRE(r1.size() == 3);
  CHECK(r1[0].output.rows == 16);
  CHECK(r1[0].output.cols == 16);  // (16x32)(32x16)
  CHECK(r1[1].output.rows == 16);
  CHECK(r1[1].output.cols == 32);  // (16x16)(16x32)
  CHECK(r1[2].output.rows == 16);
  CHECK(r1[2].output.cols == 32);  // (16x32)(32x32)
  CHECK(r1[0].traces.size() == 16 * 16);
  CHECK(r1[0].traces[0].size() == 32);  // K traces per element

  const auto r2 = attention_workload(16, 32, 99, cfg, true);
  for (size_t i = 0; i < 3; ++i) CHECK(r1[i].output.data == r2[i].output.data);

  const auto r3 = attention_workload(16, 32, 100, cfg, false);
  CHECK(r3[0].output.data != r1[0].output.data);
}
