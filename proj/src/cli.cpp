#include "fpan/cli.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fpan/oracle.hpp"

namespace fpan::cli {

std::optional<FloatFormat> parse_format(std::string_view spec) {
  if (spec == "fp32") return FloatFormat::fp32();
  if (spec == "bf16") return FloatFormat::bf16();
  if (spec == "e4m3") return FloatFormat::e4m3();
  if (spec == "e5m2") return FloatFormat::e5m2();
  if (spec.starts_with("custom:")) {
    const std::string_view rest = spec.substr(7);
    const size_t comma = rest.find(',');
    if (comma == std::string_view::npos) return std::nullopt;
    int e = 0, m = 0;
    auto r1 = std::from_chars(rest.data(), rest.data() + comma, e);
    auto r2 = std::from_chars(rest.data() + comma + 1, rest.data() + rest.size(), m);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} ||
        r1.ptr != rest.data() + comma || r2.ptr != rest.data() + rest.size()) {
      return std::nullopt;
    }
    try {
      return FloatFormat(e, m);
    } catch (const std::invalid_argument&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::string format_to_string(const FloatFormat& fmt) {
  if (fmt == FloatFormat::fp32()) return "fp32";
  if (fmt == FloatFormat::bf16()) return "bf16";
  if (fmt == FloatFormat::e4m3()) return "e4m3";
  if (fmt == FloatFormat::e5m2()) return "e5m2";
  return "custom:" + std::to_string(fmt.exp_bits) + "," + std::to_string(fmt.man_bits);
}

std::optional<NormSpec> parse_norm(std::string_view spec) {
  if (spec == "accurate") return NormSpec{NormMode::Accurate, 0, 0};
  if (!spec.starts_with("an-")) return std::nullopt;
  const std::string_view rest = spec.substr(3);
  const size_t dash = rest.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  int k = 0, lambda = 0;
  auto r1 = std::from_chars(rest.data(), rest.data() + dash, k);
  auto r2 = std::from_chars(rest.data() + dash + 1, rest.data() + rest.size(), lambda);
  if (r1.ec != std::errc{} || r2.ec != std::errc{} || r1.ptr != rest.data() + dash ||
      r2.ptr != rest.data() + rest.size() || k < 1 || lambda < 1) {
    return std::nullopt;
  }
  return NormSpec{NormMode::Approx, k, lambda};
}

std::string norm_to_string(const NormSpec& n) {
  if (n.mode == NormMode::Accurate) return "accurate";
  return "an-" + std::to_string(n.k) + "-" + std::to_string(n.lambda);
}

std::optional<std::pair<int, int>> parse_array_dims(std::string_view spec) {
  const size_t x = spec.find('x');
  if (x == std::string_view::npos) return std::nullopt;
  int r = 0, c = 0;
  auto r1 = std::from_chars(spec.data(), spec.data() + x, r);
  auto r2 = std::from_chars(spec.data() + x + 1, spec.data() + spec.size(), c);
  if (r1.ec != std::errc{} || r2.ec != std::errc{} || r1.ptr != spec.data() + x ||
      r2.ptr != spec.data() + spec.size() || r < 1 || c < 1) {
    return std::nullopt;
  }
  return std::pair{r, c};
}

double fp_value_to_double(const FpValue& v) {
  switch (v.cls) {
    case FpClass::Zero:
      return v.sign < 0 ? -0.0 : 0.0;
    case FpClass::Inf:
      return v.sign * std::numeric_limits<double>::infinity();
    case FpClass::NaN:
      return std::numeric_limits<double>::quiet_NaN();
    case FpClass::Normal:
      return to_exact(v).to_double();
  }
  return 0.0;
}

namespace {

std::string hex_token(uint32_t bits, const FloatFormat& fmt) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%0*X", (fmt.total_bits() + 3) / 4, bits);
  return buf;
}

uint32_t parse_element(const std::string& tok, const FloatFormat& fmt, int row, int col) {
  const auto fail = [&](const char* why) {
    throw std::runtime_error("matrix element at row " + std::to_string(row) + ", col " +
                             std::to_string(col) + ": " + why + " ('" + tok + "')");
  };
  if (tok.starts_with("0x") || tok.starts_with("0X")) {
    uint64_t bits = 0;
    auto r = std::from_chars(tok.data() + 2, tok.data() + tok.size(), bits, 16);
    if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size()) fail("bad hex token");
    if (bits >= (uint64_t{1} << fmt.total_bits())) fail("bit pattern exceeds format width");
    return static_cast<uint32_t>(bits);
  }
  if (tok == "nan") return encode(FpValue::nan(), fmt);
  if (tok == "inf") return encode(FpValue::inf(+1), fmt);
  if (tok == "-inf") return encode(FpValue::inf(-1), fmt);
  char* end = nullptr;
  const double d = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) fail("bad decimal token");
  if (std::isnan(d)) return encode(FpValue::nan(), fmt);
  if (std::isinf(d)) return encode(FpValue::inf(d < 0 ? -1 : +1), fmt);
  return encode(round_exact(ExactDyadic::from_double(d), fmt), fmt);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, sep)) {
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.erase(0, 1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) {
      tok.pop_back();
    }
    out.push_back(tok);
  }
  return out;
}

}  // namespace

MatrixF load_matrix(const std::string& path, const FloatFormat& fmt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty matrix file: " + path);
  const auto header = split(line, ',');
  int rows = 0, cols = 0;
  if (header.size() != 2) throw std::runtime_error("bad header (want rows,cols): " + path);
  try {
    rows = std::stoi(header[0]);
    cols = std::stoi(header[1]);
  } catch (const std::exception&) {
    throw std::runtime_error("bad header (want rows,cols): " + path);
  }
  if (rows < 1 || cols < 1) throw std::runtime_error("bad dimensions in " + path);

  MatrixF m(rows, cols, fmt);
  for (int i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("missing row " + std::to_string(i));
    const auto toks = split(line, ',');
    if (static_cast<int>(toks.size()) != cols) {
      throw std::runtime_error("row " + std::to_string(i) + " has " +
                               std::to_string(toks.size()) + " elements, want " +
                               std::to_string(cols));
    }
    for (int j = 0; j < cols; ++j) m.at(i, j) = parse_element(toks[j], fmt, i, j);
  }
  return m;
}

void save_matrix(const MatrixF& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write matrix file: " + path);
  out << m.rows << "," << m.cols << "\n";
  const bool hex = path.ends_with(".hex");
  char buf[40];
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      if (j) out << ",";
      if (hex) {
        out << hex_token(m.at(i, j), m.fmt);
      } else {
        const FpValue v = decode(m.at(i, j), m.fmt);
        if (v.cls == FpClass::NaN) {
          out << "nan";
        } else if (v.cls == FpClass::Inf) {
          out << (v.sign < 0 ? "-inf" : "inf");
        } else {
          std::snprintf(buf, sizeof buf, "%.17g", fp_value_to_double(v));
          out << buf;
        }
      }
    }
    out << "\n";
  }
}

nlohmann::json histogram_json(const ShiftHistogram& h) {
  nlohmann::json bins = nlohmann::json::object();
  for (const auto& [bin, n] : h.counts) {
    bins[bin == ShiftHistogram::kCarryRight1 ? "carry_right_1" : std::to_string(bin)] = n;
  }
  return {{"schema_version", kSchemaVersion},
          {"total", h.total},
          {"unnormalized", h.unnormalized_events},
          {"zero_sums", h.zero_sums},
          {"bins", bins}};
}

nlohmann::json error_report_json(const ErrorReport& r) {
  nlohmann::json ulp = nlohmann::json::object();
  for (const auto& [d, n] : r.ulp_histogram) {
    ulp[d == ErrorReport::kSpecialBin ? "special" : std::to_string(d)] = n;
  }
  return {{"schema_version", kSchemaVersion},
          {"elements", r.elements},
          {"mismatches", r.mismatches},
          {"mismatch_rate", r.mismatch_rate},
          {"mean_abs_rel_error", r.mean_abs_rel_error},
          {"max_abs_rel_error", r.max_abs_rel_error},
          {"nan_inf_disagreements", r.nan_inf_disagreements},
          {"ulp_histogram", ulp}};
}

std::string sweep_csv(const SweepResult& s) {
  std::ostringstream out;
  out << "k,lambda,mean_abs_rel_error,max_abs_rel_error,mismatch_rate,"
         "unnormalized_rate,total_fmas\n";
  for (const SweepRow& row : s.rows) {
    const double unnorm_rate =
        row.hist.total ? static_cast<double>(row.hist.unnormalized_events) / row.hist.total
                       : 0.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d,%d,%.9e,%.9e,%.9f,%.9f,%llu\n", row.k, row.lambda,
                  row.error.mean_abs_rel_error, row.error.max_abs_rel_error,
                  row.error.mismatch_rate, unnorm_rate,
                  static_cast<unsigned long long>(row.hist.total));
    out << buf;
  }
  return out.str();
}

InternalSum internal_from_exact(const ExactDyadic& x, int acc_bits) {
  if (x.is_zero()) return InternalSum::zero();
  const long bl = static_cast<long>(boost::multiprecision::msb(x.mantissa)) + 1;
  long e = bl - 1 + x.scale;
  BigInt sig = x.mantissa;
  if (bl > acc_bits) {
    const long shift = bl - acc_bits;
    BigInt keep = sig >> shift;
    const BigInt rem = sig - (keep << shift);
    const BigInt half = BigInt(1) << (shift - 1);
    if (rem > half || (rem == half && boost::multiprecision::bit_test(keep, 0))) ++keep;
    if (boost::multiprecision::bit_test(keep, unsigned(acc_bits))) {
      keep >>= 1;
      ++e;
    }
    sig = keep;
  } else {
    sig <<= (acc_bits - bl);
  }
  InternalSum s;
  s.cls = FpClass::Normal;
  s.sign = x.sign;
  s.exponent = static_cast<int>(e);
  s.significand = sig.convert_to<uint64_t>();
  return s;
}

FmaResult run_fma(uint32_t a_bits, uint32_t b_bits, double c_value,
                  const FloatFormat& fmt, const NormSpec& norm) {
  const PEConfig cfg = norm.mode == NormMode::Accurate
                           ? PEConfig::accurate(fmt)
                           : PEConfig::approx(fmt, norm.k, norm.lambda);
  const FpValue a = decode(a_bits, fmt);
  const FpValue b = decode(b_bits, fmt);
  InternalSum c;
  if (std::isnan(c_value)) {
    c = InternalSum::nan();
  } else if (std::isinf(c_value)) {
    c = InternalSum::inf(c_value < 0 ? -1 : +1);
  } else {
    c = internal_from_exact(ExactDyadic::from_double(c_value), cfg.acc_sig_bits());
  }
  FmaResult r;
  auto [sum, trace] = pe_fma(a, b, c, cfg);
  r.sum = sum;
  r.trace = trace;
  r.out_bits = south_round(sum, fmt);
  return r;
}

std::string describe_fma(const FmaResult& r, const FloatFormat& fmt) {
  std::ostringstream out;
  const FpValue v = decode(r.out_bits, fmt);
  out << "result bits: " << hex_token(r.out_bits, fmt) << "\n";
  out << "result value: " << fp_value_to_double(v) << "\n";
  const char* cls = r.sum.cls == FpClass::Zero    ? "zero"
                    : r.sum.cls == FpClass::Normal ? "normal"
                    : r.sum.cls == FpClass::Inf    ? "inf"
                                                   : "nan";
  out << "internal sum: class=" << cls << " sign=" << (r.sum.sign < 0 ? "-" : "+")
      << " exp=" << r.sum.exponent << " sig=0x" << std::hex << r.sum.significand
      << std::dec << "\n";
  out << "trace: op=" << (r.trace.effective_op == EffectiveOp::Add ? "add" : "sub")
      << " exp_diff=" << r.trace.exp_diff
      << " carry_right_shift=" << (r.trace.carry_right_shift ? 1 : 0)
      << " accurate_shift=" << r.trace.accurate_shift
      << " applied_shift=" << r.trace.applied_shift
      << " unnormalized=" << (r.trace.unnormalized ? 1 : 0)
      << " zero_sum=" << (r.trace.zero_sum ? 1 : 0) << "\n";
  return out.str();
}

namespace {

// Builds the (a, b, c) triple used by the exhaustive datapath sweeps: BF16
// operands with unit exponents and a partial sum whose exponent sits
// exp_diff below the product's, with a mixed significand pattern.
struct SweepCase {
  FpValue a, b;
  InternalSum c;
};

SweepCase make_sweep_case(uint32_t sa, uint32_t sb, int exp_diff, int sign_a, int sign_c) {
  SweepCase sc;
  sc.a = FpValue{FpClass::Normal, sign_a, 0, sa, 8};
  sc.b = FpValue{FpClass::Normal, +1, 0, sb, 8};
  sc.c.cls = FpClass::Normal;
  sc.c.sign = sign_c;
  sc.c.exponent = exp_diff;
  sc.c.significand = 0x8000u | ((sa * 0x9E37u + sb * 0x79B9u) & 0x7FFFu);
  return sc;
}

}  // namespace

int run_oracle_check(bool full, std::ostream& out) {
  const FloatFormat bf16 = FloatFormat::bf16();
  const int acc = 16;
  bool ok = true;

  // Shift dominance, exhaustive over all 17-bit raw sums and k, lambda in 1..3.
  {
    uint64_t violations = 0;
    for (int k = 1; k <= 3 && violations == 0; ++k) {
      for (int lambda = 1; lambda <= 3 && violations == 0; ++lambda) {
        for (uint64_t raw = 1; raw < (uint64_t{1} << (acc + 1)); ++raw) {
          auto [sa, ta] = normalize_approx(raw, +1, 0, acc, k, lambda);
          auto [se, te] = normalize_accurate(raw, +1, 0, acc);
          const bool carry = raw >> acc;
          const bool in_set = ta.applied_shift == 0 || ta.applied_shift == k ||
                              ta.applied_shift == k + lambda;
          const bool dominated = ta.applied_shift <= te.accurate_shift;
          const bool eq_iff = (ta.applied_shift == te.accurate_shift) ==
                              (te.accurate_shift == 0 || te.accurate_shift == k ||
                               te.accurate_shift == k + lambda);
          if ((!carry && (!in_set || !dominated || !eq_iff)) ||
              (carry && !ta.carry_right_shift)) {
            ++violations;
            out << "dominance violation: raw=0x" << std::hex << raw << std::dec
                << " k=" << k << " lambda=" << lambda
                << " applied=" << ta.applied_shift
                << " accurate=" << te.accurate_shift << "\n";
            break;
          }
        }
      }
    }
    out << (violations ? "FAIL" : "ok") << " shift dominance (exhaustive 2^17 x 9 configs)\n";
    ok &= violations == 0;
  }

  // Accurate-mode pe_fma vs the exact-dyadic replay.
  {
    uint64_t mismatches = 0;
    const int sig_step = full ? 1 : 7;  // subsample unless --full
    const PEConfig cfg = PEConfig::accurate(bf16);
    for (uint32_t sa = 0x80; sa <= 0xFF && mismatches == 0; sa += sig_step) {
      for (uint32_t sb = 0x80; sb <= 0xFF && mismatches == 0; sb += sig_step) {
        for (int diff = -20; diff <= 20; ++diff) {
          for (int signs = 0; signs < 4; ++signs) {
            const SweepCase sc = make_sweep_case(sa, sb, diff, signs & 1 ? -1 : +1,
                                                 signs & 2 ? -1 : +1);
            const InternalSum got = pe_fma(sc.a, sc.b, sc.c, cfg).first;
            const InternalSum want = oracle::replay_fma(sc.a, sc.b, sc.c, bf16);
            if (!(got == want)) {
              ++mismatches;
              out << "fold mismatch: sa=0x" << std::hex << sa << " sb=0x" << sb
                  << std::dec << " exp_diff=" << diff << " signs=" << signs << "\n";
              break;
            }
          }
          if (mismatches) break;
        }
      }
    }
    out << (mismatches ? "FAIL" : "ok") << " accurate-vs-exact fold equivalence"
        << (full ? " (full sweep)\n" : " (subsampled; use --full for the complete sweep)\n");
    ok &= mismatches == 0;
  }

  return ok ? kExitOk : kExitProperty;
}

}  // namespace fpan::cli
