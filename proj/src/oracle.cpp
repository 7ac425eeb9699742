#include "fpan/oracle.hpp"

#include <stdexcept>

namespace fpan::oracle {

namespace {

struct Scaled {
  // value = sign * sig * 2^(exp - (acc-1)), sig held as a BigInt
  int sign = +1;
  BigInt sig = 0;
  long exp = 0;
};

// Exact product of two finite values, normalized so the BigInt's leading bit
// sits at position acc-1.
Scaled exact_product(const FpValue& a, const FpValue& b, int acc) {
  Scaled p;
  p.sign = a.sign * b.sign;
  if (a.cls == FpClass::Zero || b.cls == FpClass::Zero) return p;
  BigInt prod = BigInt(a.significand) * b.significand;
  const long m = static_cast<long>(boost::multiprecision::msb(prod));
  const long frame = static_cast<long>(a.sig_bits - 1) + (b.sig_bits - 1);
  p.exp = a.exponent + b.exponent - frame + m;
  p.sig = prod << (acc - 1 - m);
  return p;
}

}  // namespace

InternalSum replay_fma(const FpValue& a, const FpValue& b, const InternalSum& c,
                       const FloatFormat& fmt) {
  if (a.is_special() || b.is_special() || c.cls == FpClass::Inf || c.cls == FpClass::NaN) {
    throw std::invalid_argument("replay_fma: finite operands only");
  }
  const int acc = 2 * fmt.sig_bits();

  const Scaled p = exact_product(a, b, acc);
  Scaled cs{c.sign, c.cls == FpClass::Zero ? BigInt(0) : BigInt(c.significand),
            c.exponent};

  // Align to the larger exponent; the BigInt right shift floors, which is
  // exactly the discard-on-alignment truncation.
  long common;
  BigInt ps = p.sig, csig = cs.sig;
  if (p.sig == 0) {
    common = cs.exp;
  } else if (cs.sig == 0) {
    common = p.exp;
  } else if (p.exp >= cs.exp) {
    common = p.exp;
    csig >>= (p.exp - cs.exp);
  } else {
    common = cs.exp;
    ps >>= (cs.exp - p.exp);
  }

  BigInt v = (p.sign < 0 ? -ps : ps) + (cs.sign < 0 ? -csig : csig);
  if (v == 0) return InternalSum::zero();
  const int sign = v < 0 ? -1 : +1;
  if (v < 0) v = -v;

  const long m = static_cast<long>(boost::multiprecision::msb(v));
  InternalSum out;
  out.cls = FpClass::Normal;
  out.sign = sign;
  if (m == acc) {
    // carry: 1-bit right shift drops the LSB
    out.significand = (v >> 1).convert_to<uint64_t>();
    out.exponent = static_cast<int>(common + 1);
  } else {
    out.significand = (v << (acc - 1 - m)).convert_to<uint64_t>();
    out.exponent = static_cast<int>(common - (acc - 1 - m));
  }
  return out;
}

uint32_t replay_fold(std::span<const FpValue> a, std::span<const FpValue> b,
                     const FloatFormat& fmt) {
  if (a.size() != b.size()) throw std::invalid_argument("replay_fold: length mismatch");
  InternalSum acc = InternalSum::zero();
  for (size_t t = 0; t < a.size(); ++t) {
    acc = replay_fma(a[t], b[t], acc, fmt);
  }
  if (acc.cls == FpClass::Zero) return encode(FpValue::zero(acc.sign), fmt);
  // South rounding via the dyadic route rather than the integer encode path.
  const ExactDyadic x = ExactDyadic::make(
      acc.sign, BigInt(acc.significand),
      static_cast<long>(acc.exponent) - (2 * fmt.sig_bits() - 1));
  return encode(round_exact(x, fmt), fmt);
}

}  // namespace fpan::oracle
