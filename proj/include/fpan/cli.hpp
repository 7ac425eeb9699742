#pragma once

// Command-line plumbing: flag-spec parsing, matrix file I/O, report
// serialization, and the command bodies shared between the binary and the
// tests.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "fpan/analysis.hpp"
#include "fpan/formats.hpp"
#include "fpan/pe.hpp"
#include "fpan/systolic.hpp"

namespace fpan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;       // bad flag/token
inline constexpr int kExitValidation = 3;  // bad file/shape/range
inline constexpr int kExitProperty = 4;    // oracle-check violation
inline constexpr int kSchemaVersion = 1;

// fp32 | bf16 | e4m3 | e5m2 | custom:E,M
std::optional<FloatFormat> parse_format(std::string_view spec);
std::string format_to_string(const FloatFormat& fmt);

struct NormSpec {
  NormMode mode = NormMode::Accurate;
  int k = 0;
  int lambda = 0;
};

// accurate | an-K-L (an-1-2 -> k=1, lambda=2)
std::optional<NormSpec> parse_norm(std::string_view spec);
std::string norm_to_string(const NormSpec& n);

// "RxC", both positive
std::optional<std::pair<int, int>> parse_array_dims(std::string_view spec);

// CSV of decimal values with a "rows,cols" header line, or the raw hex
// variant (tokens starting with 0x) for bit-exact interchange. Throws
// std::runtime_error with a row/col-naming message on bad input.
MatrixF load_matrix(const std::string& path, const FloatFormat& fmt);

// Writes hex when the path ends in ".hex", decimal CSV otherwise.
void save_matrix(const MatrixF& m, const std::string& path);

nlohmann::json histogram_json(const ShiftHistogram& h);
nlohmann::json error_report_json(const ErrorReport& r);
std::string sweep_csv(const SweepResult& s);

struct FmaResult {
  uint32_t out_bits = 0;
  InternalSum sum;
  NormTrace trace;
};

FmaResult run_fma(uint32_t a_bits, uint32_t b_bits, double c_value,
                  const FloatFormat& fmt, const NormSpec& norm);
std::string describe_fma(const FmaResult& r, const FloatFormat& fmt);

// Converts an exact value into the double-width internal-sum representation
// (nearest-even if it does not fit).
InternalSum internal_from_exact(const ExactDyadic& x, int acc_bits);

// Property oracles: exhaustive shift dominance and accurate-vs-exact fold
// equivalence. Prints one line per check (counterexample bits on failure)
// and returns kExitOk or kExitProperty. `full` runs the complete
// 256x256 x exp-diff x sign sweep instead of a subsampled one.
int run_oracle_check(bool full, std::ostream& out);

double fp_value_to_double(const FpValue& v);

}  // namespace fpan::cli
