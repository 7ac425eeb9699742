#include "fpan/pe.hpp"

#include <bit>
#include <stdexcept>

namespace fpan {

PEConfig PEConfig::accurate(const FloatFormat& fmt) {
  return PEConfig{fmt, NormMode::Accurate, 0, 0};
}

PEConfig PEConfig::approx(const FloatFormat& fmt, int k, int lambda) {
  PEConfig cfg{fmt, NormMode::Approx, k, lambda};
  if (k < 1 || lambda < 1 || k + lambda > cfg.acc_sig_bits()) {
    throw std::invalid_argument("PEConfig: need k >= 1, lambda >= 1, k+lambda <= acc_sig_bits");
  }
  return cfg;
}

MulStageOut multiply_stage(const FpValue& a, const FpValue& b, const PEConfig& cfg) {
  MulStageOut out;
  out.sign = a.sign * b.sign;

  if (a.cls == FpClass::NaN || b.cls == FpClass::NaN) {
    out.cls = FpClass::NaN;
    return out;
  }
  if (a.cls == FpClass::Inf || b.cls == FpClass::Inf) {
    // 0 * Inf is invalid.
    out.cls = (a.cls == FpClass::Zero || b.cls == FpClass::Zero) ? FpClass::NaN : FpClass::Inf;
    return out;
  }
  if (a.cls == FpClass::Zero || b.cls == FpClass::Zero) {
    out.cls = FpClass::Zero;
    return out;
  }

  const int acc = cfg.acc_sig_bits();
  // Exact 2p-bit product; both inputs are 1.x so the product lies in [1, 4).
  uint64_t prod = a.significand * b.significand;
  int e = a.exponent + b.exponent;
  if (prod >> (acc - 1)) {
    // Product in [2, 4): the 1.x alignment is a 1-bit right shift; the bit it
    // drops is the zero appended when the 2p-bit product was placed in the
    // acc-wide register.
    ++e;
  } else {
    prod <<= 1;
  }
  out.cls = FpClass::Normal;
  out.exponent = e;
  out.significand = prod;
  return out;
}

namespace {

uint64_t shift_right_discard(uint64_t x, int amount) {
  return amount >= 64 ? 0 : x >> amount;
}

}  // namespace

AlignedOperands align(const MulStageOut& p, const InternalSum& c, int acc_bits) {
  (void)acc_bits;
  AlignedOperands out;
  out.exp_diff = p.exponent - c.exponent;
  if (out.exp_diff >= 0) {
    out.common_exp = p.exponent;
    out.p = p.significand;
    out.c = shift_right_discard(c.significand, out.exp_diff);
  } else {
    out.common_exp = c.exponent;
    out.p = shift_right_discard(p.significand, -out.exp_diff);
    out.c = c.significand;
  }
  return out;
}

RawSum add_magnitudes(uint64_t aligned_p, uint64_t aligned_c, int sign_p, int sign_c) {
  RawSum r;
  if (sign_p == sign_c) {
    r.op = EffectiveOp::Add;
    r.sum = aligned_p + aligned_c;
    r.sign = sign_p;
  } else {
    r.op = EffectiveOp::Subtract;
    if (aligned_p >= aligned_c) {
      r.sum = aligned_p - aligned_c;
      // Sign of the operand with the largest magnitude; exact cancellation
      // yields +0.
      r.sign = aligned_p == aligned_c ? +1 : sign_p;
    } else {
      r.sum = aligned_c - aligned_p;
      r.sign = sign_c;
    }
  }
  return r;
}

namespace {

int leading_zeros(uint64_t raw, int acc_bits) {
  return acc_bits - std::bit_width(raw);
}

std::pair<InternalSum, NormTrace> normalize_zero(int acc_bits, int applied_shift) {
  NormTrace t;
  t.accurate_shift = acc_bits;
  t.applied_shift = applied_shift;
  t.zero_sum = true;
  return {InternalSum::zero(), t};
}

std::pair<InternalSum, NormTrace> normalize_carry(uint64_t raw_sum, int sign, int common_exp,
                                                  int acc_bits) {
  // Addition overflowed into bit acc_bits: 1-bit right shift, LSB discarded.
  NormTrace t;
  t.carry_right_shift = true;
  InternalSum s;
  s.cls = FpClass::Normal;
  s.sign = sign;
  s.exponent = common_exp + 1;
  s.significand = (raw_sum >> 1) & ((uint64_t{1} << acc_bits) - 1);
  return {s, t};
}

}  // namespace

std::pair<InternalSum, NormTrace> normalize_accurate(uint64_t raw_sum, int sign,
                                                     int common_exp, int acc_bits) {
  if (raw_sum == 0) return normalize_zero(acc_bits, acc_bits);
  if (raw_sum >> acc_bits) return normalize_carry(raw_sum, sign, common_exp, acc_bits);

  const int lz = leading_zeros(raw_sum, acc_bits);
  NormTrace t;
  t.accurate_shift = lz;
  t.applied_shift = lz;
  InternalSum s;
  s.cls = FpClass::Normal;
  s.sign = sign;
  s.exponent = common_exp - lz;
  s.significand = raw_sum << lz;
  return {s, t};
}

std::pair<InternalSum, NormTrace> normalize_approx(uint64_t raw_sum, int sign,
                                                   int common_exp, int acc_bits,
                                                   int k, int lambda) {
  if (raw_sum == 0) {
    // Both OR checks fail; the hardware applies the k+lambda shift anyway.
    return normalize_zero(acc_bits, k + lambda);
  }
  if (raw_sum >> acc_bits) return normalize_carry(raw_sum, sign, common_exp, acc_bits);

  // OR-reduce over the top k bits, then the next lambda bits.
  int shift;
  if (raw_sum >> (acc_bits - k)) {
    shift = 0;
  } else if (raw_sum >> (acc_bits - k - lambda)) {
    shift = k;
  } else {
    shift = k + lambda;
  }

  NormTrace t;
  t.accurate_shift = leading_zeros(raw_sum, acc_bits);
  t.applied_shift = shift;
  InternalSum s;
  s.cls = FpClass::Normal;
  s.sign = sign;
  s.exponent = common_exp - shift;
  s.significand = raw_sum << shift;  // never over-normalizes: the checked bits were 0
  t.unnormalized = (s.significand >> (acc_bits - 1)) == 0;
  return {s, t};
}

namespace {

std::pair<InternalSum, NormTrace> normalize(uint64_t raw_sum, int sign, int common_exp,
                                            const PEConfig& cfg) {
  const int acc = cfg.acc_sig_bits();
  return cfg.mode == NormMode::Accurate
             ? normalize_accurate(raw_sum, sign, common_exp, acc)
             : normalize_approx(raw_sum, sign, common_exp, acc, cfg.k, cfg.lambda);
}

}  // namespace

std::pair<InternalSum, NormTrace> pe_fma(const FpValue& a, const FpValue& b,
                                         const InternalSum& c, const PEConfig& cfg) {
  const MulStageOut p = multiply_stage(a, b, cfg);

  if (p.cls == FpClass::NaN || c.cls == FpClass::NaN) {
    return {InternalSum::nan(), NormTrace{}};
  }
  if (p.cls == FpClass::Inf || c.cls == FpClass::Inf) {
    if (p.cls == FpClass::Inf && c.cls == FpClass::Inf && p.sign != c.sign) {
      return {InternalSum::nan(), NormTrace{}};  // Inf - Inf
    }
    return {InternalSum::inf(p.cls == FpClass::Inf ? p.sign : c.sign), NormTrace{}};
  }

  // Zero operands still pass through the adder/normalizer so the trace
  // reflects what the hardware would do.
  uint64_t ap = 0, ac = 0;
  int sp = p.sign, sc = c.sign;
  int common_exp = 0, exp_diff = 0;
  if (p.cls == FpClass::Normal && c.cls == FpClass::Normal) {
    const AlignedOperands al = align(p, c, cfg.acc_sig_bits());
    ap = al.p;
    ac = al.c;
    common_exp = al.common_exp;
    exp_diff = al.exp_diff;
  } else if (p.cls == FpClass::Normal) {
    ap = p.significand;
    common_exp = p.exponent;
    sc = sp;
  } else if (c.cls == FpClass::Normal) {
    ac = c.significand;
    common_exp = c.exponent;
    sp = sc;
  }

  const RawSum raw = add_magnitudes(ap, ac, sp, sc);
  auto [sum, trace] = normalize(raw.sum, raw.sign, common_exp, cfg);
  trace.effective_op = raw.op;
  trace.exp_diff = exp_diff;
  return {sum, trace};
}

void ShiftHistogram::add(const NormTrace& t) {
  const int bin = t.carry_right_shift ? kCarryRight1 : t.applied_shift;
  ++counts[bin];
  ++total;
  if (t.unnormalized) ++unnormalized_events;
  if (t.zero_sum) ++zero_sums;
}

void ShiftHistogram::merge(const ShiftHistogram& o) {
  for (const auto& [bin, n] : o.counts) counts[bin] += n;
  total += o.total;
  unnormalized_events += o.unnormalized_events;
  zero_sums += o.zero_sums;
}

}  // namespace fpan
