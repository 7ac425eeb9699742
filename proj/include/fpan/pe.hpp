#pragma once

// Bit-accurate model of the two-stage fused multiply-add processing element.
// Stage 1 multiplies the operand significands and compares exponents; stage 2
// aligns, adds and normalizes the double-width partial sum. Normalization is
// either accurate (exact leading-zero count, standing in for the LZA) or
// approximate (OR-checks over the top k and next lambda bits, fixed shifts
// {0, k, k+lambda}). No rounding happens inside the PE.

#include <cstdint>
#include <map>
#include <utility>

#include "fpan/formats.hpp"

namespace fpan {

enum class NormMode { Accurate, Approx };

struct PEConfig {
  FloatFormat fmt;
  NormMode mode = NormMode::Accurate;
  int k = 0;       // Approx only
  int lambda = 0;  // Approx only

  // Partial sums carry twice the operand significand width (BF16 -> 16 bits).
  int acc_sig_bits() const { return 2 * fmt.sig_bits(); }

  static PEConfig accurate(const FloatFormat& fmt);
  static PEConfig approx(const FloatFormat& fmt, int k, int lambda);
};

/// Extended-precision partial sum flowing north->south through a PE column.
/// Significand is acc_sig_bits wide in a 1.(acc_sig_bits-1) fixed-point frame:
/// value = sign * significand * 2^(exponent - (acc_sig_bits-1)).
/// In Approx mode the MSB may be 0 (partially normalized result).
struct InternalSum {
  FpClass cls = FpClass::Zero;
  int sign = +1;
  int exponent = 0;  // working range wider than the format; clamped only at south-end encode
  uint64_t significand = 0;

  static InternalSum zero() { return {}; }
  static InternalSum inf(int sign) { return {FpClass::Inf, sign, 0, 0}; }
  static InternalSum nan() { return {FpClass::NaN, +1, 0, 0}; }

  bool operator==(const InternalSum&) const = default;
};

enum class EffectiveOp { Add, Subtract };

/// Per-FMA normalization record; feeds the shift histograms and the
/// dominance/error-provenance checks.
struct NormTrace {
  EffectiveOp effective_op = EffectiveOp::Add;
  int exp_diff = 0;               // product exponent minus partial-sum exponent
  bool carry_right_shift = false; // addition overflow, 1-bit right shift
  int accurate_shift = 0;         // leading-zero count of the raw sum (= acc bits for exact zero)
  int applied_shift = 0;
  bool unnormalized = false;      // final MSB = 0 on a nonzero result
  bool zero_sum = false;
};

/// Stage-1 output: exact product in a 1.(acc_sig_bits-1) frame, MSB = 1
/// unless the product is special/zero.
struct MulStageOut {
  FpClass cls = FpClass::Zero;
  int sign = +1;
  int exponent = 0;
  uint64_t significand = 0;
};

struct AlignedOperands {
  uint64_t p = 0;       // product significand after alignment
  uint64_t c = 0;       // partial-sum significand after alignment
  int common_exp = 0;
  int exp_diff = 0;     // p.exponent - c.exponent before alignment
};

struct RawSum {
  uint64_t sum = 0;     // acc_sig_bits+1 bits; bit acc_sig_bits is the carry
  int sign = +1;
  EffectiveOp op = EffectiveOp::Add;
};

MulStageOut multiply_stage(const FpValue& a, const FpValue& b, const PEConfig& cfg);

// The operand with the smaller exponent is right-shifted by the exponent
// difference; shifted-out bits are discarded (no guard/round/sticky).
AlignedOperands align(const MulStageOut& p, const InternalSum& c, int acc_bits);

RawSum add_magnitudes(uint64_t aligned_p, uint64_t aligned_c, int sign_p, int sign_c);

std::pair<InternalSum, NormTrace> normalize_accurate(uint64_t raw_sum, int sign,
                                                     int common_exp, int acc_bits);

std::pair<InternalSum, NormTrace> normalize_approx(uint64_t raw_sum, int sign,
                                                   int common_exp, int acc_bits,
                                                   int k, int lambda);

// Full PE: multiply_stage -> align -> add_magnitudes -> normalize. Special
// values propagate (any NaN -> NaN, Inf-Inf -> NaN, Inf otherwise -> Inf).
std::pair<InternalSum, NormTrace> pe_fma(const FpValue& a, const FpValue& b,
                                         const InternalSum& c, const PEConfig& cfg);

/// Aggregate over NormTraces. Left shifts bin by amount; the overflow
/// right-by-1 shift gets its own bin (kCarryRight1).
struct ShiftHistogram {
  static constexpr int kCarryRight1 = -1;

  std::map<int, uint64_t> counts;
  uint64_t total = 0;
  uint64_t unnormalized_events = 0;
  uint64_t zero_sums = 0;

  void add(const NormTrace& t);
  void merge(const ShiftHistogram& o);
};

}  // namespace fpan
