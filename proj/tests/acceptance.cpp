// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fpan/analysis.hpp"
#include "fpan/formats.hpp"
#include "fpan/oracle.hpp"
#include "fpan/pe.hpp"
#include "fpan/systolic.hpp"

using namespace fpan;

namespace {

const FloatFormat kBf16 = FloatFormat::bf16();
constexpr int kAccBits = 16;

struct Criterion {
  std::string name;
  std::function<bool(std::string&)> run;
};

// ---------------------------------------------------------------------------
// 1. Shift dominance, exhaustive over all 17-bit raw sums and k, lambda in {1,2,3}

bool crit_shift_dominance(std::string& detail) {
  uint64_t checked = 0;
  for (int k = 1; k <= 3; ++k) {
    for (int lambda = 1; lambda <= 3; ++lambda) {
      for (uint64_t raw = 0; raw < (uint64_t{1} << (kAccBits + 1)); ++raw) {
        auto [sa, ta] = normalize_approx(raw, +1, 0, kAccBits, k, lambda);
        auto [se, te] = normalize_accurate(raw, +1, 0, kAccBits);
        ++checked;
        if (raw == 0) {
          if (sa.cls != FpClass::Zero || ta.applied_shift != k + lambda) {
            detail = "zero raw sum mishandled";
            return false;
          }
          continue;
        }
        if (raw >> kAccBits) {
          if (!ta.carry_right_shift || !te.carry_right_shift || !(sa == se)) {
            detail = "carry case diverged at raw=" + std::to_string(raw);
            return false;
          }
          continue;
        }
        const int acc_shift = te.accurate_shift;
        const bool in_set = ta.applied_shift == 0 || ta.applied_shift == k ||
                            ta.applied_shift == k + lambda;
        const bool reachable =
            acc_shift == 0 || acc_shift == k || acc_shift == k + lambda;
        if (!in_set || ta.applied_shift > acc_shift ||
            (ta.applied_shift == acc_shift) != reachable) {
          char buf[128];
          std::snprintf(buf, sizeof buf,
                        "raw=0x%05llx k=%d lambda=%d applied=%d accurate=%d",
                        static_cast<unsigned long long>(raw), k, lambda,
                        ta.applied_shift, acc_shift);
          detail = buf;
          return false;
        }
      }
    }
  }
  detail = std::to_string(checked) + " cases, zero violations";
  return true;
}

// ---------------------------------------------------------------------------
// Shared exhaustive FMA sweep for criteria 2 and 3: all 256x256 significand
// pairs x exponent differences in [-20, 20] x four sign combinations.

struct SweepOutcome {
  uint64_t cases = 0;
  uint64_t oracle_mismatches = 0;
  uint64_t case_law_violations = 0;
  std::string first_bad;
};

SweepOutcome run_exhaustive_fma_sweep() {
  SweepOutcome out;
  const PEConfig cfg = PEConfig::accurate(kBf16);
  for (uint32_t sa = 0x80; sa <= 0xFF; ++sa) {
    for (uint32_t sb = 0x80; sb <= 0xFF; ++sb) {
      for (int diff = -20; diff <= 20; ++diff) {
        for (int signs = 0; signs < 4; ++signs) {
          const int sign_a = (signs & 1) ? -1 : +1;
          const int sign_c = (signs & 2) ? -1 : +1;
          const FpValue a{FpClass::Normal, sign_a, 0, sa, 8};
          const FpValue b{FpClass::Normal, +1, 0, sb, 8};
          InternalSum c;
          c.cls = FpClass::Normal;
          c.sign = sign_c;
          c.exponent = diff;
          c.significand = 0x8000u | ((sa * 0x9E37u + sb * 0x79B9u) & 0x7FFFu);

          auto [got, trace] = pe_fma(a, b, c, cfg);
          ++out.cases;

          const InternalSum want = oracle::replay_fma(a, b, c, kBf16);
          if (!(got == want)) {
            ++out.oracle_mismatches;
            if (out.first_bad.empty()) {
              char buf[128];
              std::snprintf(buf, sizeof buf, "sa=0x%02X sb=0x%02X diff=%d signs=%d",
                            sa, sb, diff, signs);
              out.first_bad = buf;
            }
            continue;
          }

          // Case laws: like signs never need a left shift; unlike signs
          // with |exp_diff| > 1 leave at most one leading zero.
          bool bad = false;
          if (trace.effective_op == EffectiveOp::Add) {
            bad = trace.accurate_shift != 0 && !trace.zero_sum;
          } else if (std::abs(trace.exp_diff) > 1) {
            bad = trace.accurate_shift > 1;
          }
          if (bad) {
            ++out.case_law_violations;
            if (out.first_bad.empty()) {
              char buf[128];
              std::snprintf(buf, sizeof buf,
                            "case law: sa=0x%02X sb=0x%02X diff=%d signs=%d shift=%d",
                            sa, sb, diff, signs, trace.accurate_shift);
              out.first_bad = buf;
            }
          }
        }
      }
    }
  }
  return out;
}

const SweepOutcome& exhaustive_sweep() {
  static const SweepOutcome out = run_exhaustive_fma_sweep();
  return out;
}

bool crit_oracle_equivalence(std::string& detail) {
  const SweepOutcome& out = exhaustive_sweep();
  if (out.oracle_mismatches) {
    detail = std::to_string(out.oracle_mismatches) + " mismatches, first: " + out.first_bad;
    return false;
  }
  detail = std::to_string(out.cases) + " FMAs bit-identical to the exact replay";
  return true;
}

bool crit_case_laws(std::string& detail) {
  const SweepOutcome& out = exhaustive_sweep();
  if (out.case_law_violations) {
    detail = std::to_string(out.case_law_violations) + " violations, first: " + out.first_bad;
    return false;
  }
  detail = "like-sign and |exp_diff|>1 laws hold over " + std::to_string(out.cases) +
           " cases";
  return true;
}

// ---------------------------------------------------------------------------
// 4. Histogram shape on the attention proxy workload

bool crit_histogram_shape(std::string& detail) {
  const ArrayConfig cfg{64, 64, PEConfig::accurate(kBf16)};
  const auto reports = attention_workload(64, 64, /*seed=*/1, cfg, /*trace=*/true);
  const ShiftHistogram h = shift_histogram(reports);
  uint64_t small = 0;
  for (const auto& [bin, n] : h.counts) {
    if (bin <= 3) small += n;  // includes the carry right-1 bin
  }
  const double frac = static_cast<double>(small) / static_cast<double>(h.total);
  char buf[96];
  std::snprintf(buf, sizeof buf, "shift<=3 fraction %.4f over %llu events (need >= 0.90)",
                frac, static_cast<unsigned long long>(h.total));
  detail = buf;
  return frac >= 0.90;
}

// ---------------------------------------------------------------------------
// 5 + 6. Seeded Gaussian 64x64 suite, 100 instances: error ordering and
// mismatch provenance share one pass over the data.

struct SuiteOutcome {
  ErrorReport accurate, an11, an12, an22;
  uint64_t unexplained = 0;
  uint64_t explained = 0;
};

const SuiteOutcome& gaussian_suite() {
  static const SuiteOutcome out = [] {
    SuiteOutcome s;
    std::mt19937_64 rng(3);
    const ArrayConfig acc{64, 64, PEConfig::accurate(kBf16)};
    const ArrayConfig c11{64, 64, PEConfig::approx(kBf16, 1, 1)};
    const ArrayConfig c12{64, 64, PEConfig::approx(kBf16, 1, 2)};
    const ArrayConfig c22{64, 64, PEConfig::approx(kBf16, 2, 2)};
    for (int inst = 0; inst < 100; ++inst) {
      const MatrixF x = gaussian_matrix(64, 64, kBf16, rng);
      const MatrixF w = gaussian_matrix(64, 64, kBf16, rng);
      const std::vector<ExactDyadic> exact = exact_matmul(x, w);
      MatrixF exact_bits(64, 64, kBf16);
      for (size_t i = 0; i < exact.size(); ++i) {
        exact_bits.data[i] = encode(round_exact(exact[i], kBf16), kBf16);
      }

      const MatmulReport r_acc = matmul(x, w, acc);
      const MatmulReport r_11 = matmul(x, w, c11);
      const MatmulReport r_12 = matmul(x, w, c12, /*trace=*/true);
      const MatmulReport r_22 = matmul(x, w, c22);

      s.accurate = merge(s.accurate, compare(r_acc.output, exact_bits, &exact));
      s.an11 = merge(s.an11, compare(r_11.output, exact_bits, &exact));
      s.an12 = merge(s.an12, compare(r_12.output, exact_bits, &exact));
      s.an22 = merge(s.an22, compare(r_22.output, exact_bits, &exact));

      // provenance: every an-1-2 deviation from accurate must trace back to
      // an FMA whose accurate shift was not in {0, 1, 3}
      for (size_t idx = 0; idx < r_12.output.data.size(); ++idx) {
        if (r_12.output.data[idx] == r_acc.output.data[idx]) continue;
        bool found = false;
        for (const NormTrace& t : r_12.traces[idx]) {
          if (t.carry_right_shift || t.zero_sum) continue;
          if (t.accurate_shift != 0 && t.accurate_shift != 1 && t.accurate_shift != 3) {
            found = true;
            break;
          }
        }
        if (found) {
          ++s.explained;
        } else {
          ++s.unexplained;
        }
      }
    }
    return s;
  }();
  return out;
}

bool crit_config_ordering(std::string& detail) {
  const SuiteOutcome& s = gaussian_suite();
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "mean rel err: accurate=%.3e an-1-1=%.3e an-1-2=%.3e an-2-2=%.3e",
                s.accurate.mean_abs_rel_error, s.an11.mean_abs_rel_error,
                s.an12.mean_abs_rel_error, s.an22.mean_abs_rel_error);
  detail = buf;
  return s.an12.mean_abs_rel_error <= s.an22.mean_abs_rel_error &&
         s.an11.mean_abs_rel_error <= s.an22.mean_abs_rel_error &&
         s.accurate.mean_abs_rel_error <= s.an12.mean_abs_rel_error;
}

bool crit_mismatch_provenance(std::string& detail) {
  const SuiteOutcome& s = gaussian_suite();
  detail = std::to_string(s.explained) + " mismatching elements explained, " +
           std::to_string(s.unexplained) + " unexplained";
  return s.unexplained == 0;
}

// ---------------------------------------------------------------------------
// 7. Tiling transparency

bool crit_tiling(std::string& detail) {
  std::mt19937_64 rng(77);
  const MatrixF x = gaussian_matrix(64, 64, kBf16, rng);
  const MatrixF w = gaussian_matrix(64, 64, kBf16, rng);
  for (const PEConfig& pe :
       {PEConfig::accurate(kBf16), PEConfig::approx(kBf16, 1, 2)}) {
    const MatmulReport base = matmul(x, w, ArrayConfig{64, 64, pe});
    for (int rows : {4, 8}) {
      const MatmulReport tiled = matmul(x, w, ArrayConfig{rows, 64, pe});
      if (tiled.output.data != base.output.data) {
        detail = "rows=" + std::to_string(rows) + " diverged";
        return false;
      }
    }
  }
  detail = "rows in {4, 8, 64} bit-identical in both normalization modes";
  return true;
}

// ---------------------------------------------------------------------------
// 8. Round-trip and special-value suite

bool crit_roundtrip_specials(std::string& detail) {
  // encode/decode identities over every bf16 pattern
  for (uint32_t bits = 0; bits < 0x10000; ++bits) {
    const FpValue v = decode(bits, kBf16);
    const uint32_t back = encode(v, kBf16);
    const uint32_t biased = (bits >> 7) & 0xFF;
    const uint32_t man = bits & 0x7F;
    uint32_t want = bits;
    if (biased == 0 && man != 0) want = bits & 0x8000;  // flushed subnormal
    if (biased == 0xFF && man != 0) want = 0x7FC0;      // canonical NaN
    if (back != want) {
      detail = "round trip broke at bits=" + std::to_string(bits);
      return false;
    }
    if (!v.is_special() && !(round_exact(to_exact(v), kBf16) == v) &&
        v.cls != FpClass::Zero) {
      detail = "round_exact(to_exact) broke at bits=" + std::to_string(bits);
      return false;
    }
  }

  // RNE ties
  if (to_exact(round_exact(ExactDyadic::make(+1, 257, 0), kBf16)).mantissa != 1 ||
      to_exact(round_exact(ExactDyadic::make(+1, 257, 0), kBf16)).scale != 8) {
    detail = "257 must tie to 256";
    return false;
  }
  if (to_exact(round_exact(ExactDyadic::make(+1, 259, 0), kBf16)).mantissa != 65) {
    detail = "259 must round to 260";
    return false;
  }

  // NaN/Inf propagation through pe_fma and matmul
  const PEConfig cfg = PEConfig::accurate(kBf16);
  const FpValue one = decode(0x3F80, kBf16);
  const FpValue inf = decode(0x7F80, kBf16);
  const FpValue qnan = decode(0x7FC0, kBf16);
  struct Case {
    FpValue a, b;
    InternalSum c;
    FpClass want;
  };
  const Case cases[] = {
      {qnan, one, InternalSum::zero(), FpClass::NaN},
      {one, one, InternalSum::nan(), FpClass::NaN},
      {inf, one, InternalSum::zero(), FpClass::Inf},
      {inf, one, InternalSum::inf(-1), FpClass::NaN},
      {inf, one, InternalSum::inf(+1), FpClass::Inf},
      {inf, FpValue::zero(), InternalSum::zero(), FpClass::NaN},
  };
  for (const Case& c : cases) {
    if (pe_fma(c.a, c.b, c.c, cfg).first.cls != c.want) {
      detail = "pe_fma special propagation broke";
      return false;
    }
  }

  MatrixF mx(1, 2, kBf16), mw(2, 1, kBf16);
  mx.at(0, 0) = 0x7F80;
  mx.at(0, 1) = 0xFF80;
  mw.at(0, 0) = 0x3F80;
  mw.at(1, 0) = 0x3F80;
  if (matmul(mx, mw, ArrayConfig{2, 1, cfg}).output.at(0, 0) != 0x7FC0) {
    detail = "matmul Inf-Inf must produce NaN";
    return false;
  }
  mx.at(0, 1) = 0x3F80;
  if (matmul(mx, mw, ArrayConfig{2, 1, cfg}).output.at(0, 0) != 0x7F80) {
    detail = "matmul Inf must stay Inf";
    return false;
  }

  detail = "encode/decode identities, RNE ties, special propagation all hold";
  return true;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"1 shift-dominance (exhaustive)", crit_shift_dominance},
      {"2 accurate-mode oracle equivalence", crit_oracle_equivalence},
      {"3 sign/exponent case laws", crit_case_laws},
      {"4 histogram shape (attention workload)", crit_histogram_shape},
      {"5 configuration error ordering", crit_config_ordering},
      {"6 exact-detection accounting", crit_mismatch_provenance},
      {"7 tiling transparency", crit_tiling},
      {"8 round-trip and special values", crit_roundtrip_specials},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %s: %s (%.1fs)\n", ok ? "PASS" : "FAIL", c.name.c_str(),
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures) std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
