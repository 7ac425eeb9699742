#include "fpan/formats.hpp"

#include <cmath>
#include <stdexcept>

namespace fpan {

FloatFormat::FloatFormat(int e, int m) : exp_bits(e), man_bits(m) {
  if (e < 2 || m < 1 || 1 + e + m > 32) {
    throw std::invalid_argument("FloatFormat: need exp_bits >= 2, man_bits >= 1, total <= 32");
  }
}

FpValue decode(uint32_t bits, const FloatFormat& fmt) {
  const uint32_t sign_bit = (bits >> (fmt.exp_bits + fmt.man_bits)) & 1u;
  const uint32_t biased = (bits >> fmt.man_bits) & fmt.exp_mask();
  const uint32_t man = bits & fmt.man_mask();
  const int sign = sign_bit ? -1 : +1;

  if (biased == fmt.exp_mask()) {
    return man == 0 ? FpValue::inf(sign) : FpValue::nan();
  }
  if (biased == 0) {
    // Subnormal encodings flush to zero.
    return FpValue::zero(sign);
  }
  FpValue v;
  v.cls = FpClass::Normal;
  v.sign = sign;
  v.exponent = static_cast<int>(biased) - fmt.bias();
  v.significand = (1u << fmt.man_bits) | man;
  v.sig_bits = fmt.sig_bits();
  return v;
}

namespace {

uint32_t pack(int sign, int exponent, uint64_t sig, const FloatFormat& fmt) {
  const uint32_t sign_bit = sign < 0 ? fmt.sign_mask() : 0u;
  const uint32_t biased = static_cast<uint32_t>(exponent + fmt.bias());
  return sign_bit | (biased << fmt.man_bits) |
         (static_cast<uint32_t>(sig) & fmt.man_mask());
}

}  // namespace

uint32_t encode(const FpValue& v, const FloatFormat& fmt) {
  switch (v.cls) {
    case FpClass::NaN:
      // Canonical quiet NaN: all-ones exponent, mantissa MSB set, sign 0.
      return (fmt.exp_mask() << fmt.man_bits) | (1u << (fmt.man_bits - 1));
    case FpClass::Inf:
      return (v.sign < 0 ? fmt.sign_mask() : 0u) | (fmt.exp_mask() << fmt.man_bits);
    case FpClass::Zero:
      return v.sign < 0 ? fmt.sign_mask() : 0u;
    case FpClass::Normal:
      break;
  }

  const int p = fmt.sig_bits();
  uint64_t sig = v.significand;
  int e = v.exponent;

  if (v.sig_bits > p) {
    // Narrow with round-to-nearest-even.
    const int shift = v.sig_bits - p;
    uint64_t keep = sig >> shift;
    const uint64_t rem = sig & ((uint64_t{1} << shift) - 1);
    const uint64_t half = uint64_t{1} << (shift - 1);
    if (rem > half || (rem == half && (keep & 1))) {
      ++keep;
    }
    if (keep >> p) {  // rounding carried into a new bit
      keep >>= 1;
      ++e;
    }
    sig = keep;
  } else {
    sig <<= (p - v.sig_bits);
  }

  if (e > fmt.max_exp()) {
    return encode(FpValue::inf(v.sign), fmt);
  }
  if (e < fmt.min_exp()) {
    return encode(FpValue::zero(v.sign), fmt);  // flush
  }
  return pack(v.sign, e, sig, fmt);
}

ExactDyadic ExactDyadic::make(int sign, BigInt mantissa, long scale) {
  ExactDyadic x;
  if (mantissa == 0) {
    return x;  // canonical zero: +, scale 0
  }
  const unsigned tz = boost::multiprecision::lsb(mantissa);
  x.sign = sign;
  x.mantissa = mantissa >> tz;
  x.scale = scale + static_cast<long>(tz);
  return x;
}

ExactDyadic ExactDyadic::from_double(double d) {
  if (d == 0.0) return zero();
  if (!std::isfinite(d)) throw std::domain_error("ExactDyadic::from_double: non-finite");
  int e = 0;
  const double m = std::frexp(std::fabs(d), &e);  // m in [0.5, 1)
  const auto mant = static_cast<uint64_t>(std::ldexp(m, 53));
  return make(d < 0 ? -1 : +1, BigInt(mant), static_cast<long>(e) - 53);
}

double ExactDyadic::to_double() const {
  if (is_zero()) return 0.0;
  // Keep at most the top 64 bits before converting; the rest only affects
  // bits below double precision.
  const long bl = static_cast<long>(boost::multiprecision::msb(mantissa)) + 1;
  BigInt m = mantissa;
  long s = scale;
  if (bl > 64) {
    m >>= (bl - 64);
    s += bl - 64;
  }
  const double md = m.convert_to<double>();
  return sign * std::ldexp(md, static_cast<int>(s));
}

ExactDyadic ExactDyadic::operator+(const ExactDyadic& o) const {
  if (is_zero()) return o;
  if (o.is_zero()) return *this;
  const long s = std::min(scale, o.scale);
  BigInt va = mantissa << (scale - s);
  BigInt vb = o.mantissa << (o.scale - s);
  if (sign < 0) va = -va;
  if (o.sign < 0) vb = -vb;
  BigInt sum = va + vb;
  if (sum == 0) return zero();
  const int rs = sum < 0 ? -1 : +1;
  if (rs < 0) sum = -sum;
  return make(rs, sum, s);
}

ExactDyadic ExactDyadic::operator-(const ExactDyadic& o) const { return *this + o.negated(); }

ExactDyadic ExactDyadic::operator*(const ExactDyadic& o) const {
  if (is_zero() || o.is_zero()) return zero();
  // Product of two odd mantissas is odd, already canonical.
  ExactDyadic x;
  x.sign = sign * o.sign;
  x.mantissa = mantissa * o.mantissa;
  x.scale = scale + o.scale;
  return x;
}

ExactDyadic ExactDyadic::negated() const {
  ExactDyadic x = *this;
  if (!x.is_zero()) x.sign = -x.sign;
  return x;
}

ExactDyadic to_exact(const FpValue& v) {
  switch (v.cls) {
    case FpClass::Zero:
      return ExactDyadic::zero();
    case FpClass::Normal:
      return ExactDyadic::make(v.sign, BigInt(v.significand),
                               static_cast<long>(v.exponent) - (v.sig_bits - 1));
    default:
      throw std::domain_error("to_exact: Inf/NaN have no exact value");
  }
}

ExactDyadic exact_dot(std::span<const FpValue> a, std::span<const FpValue> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("exact_dot: length mismatch");
  }
  ExactDyadic acc = ExactDyadic::zero();
  for (size_t i = 0; i < a.size(); ++i) {
    acc = acc + to_exact(a[i]) * to_exact(b[i]);
  }
  return acc;
}

FpValue round_exact(const ExactDyadic& x, const FloatFormat& fmt) {
  if (x.is_zero()) return FpValue::zero(x.sign);

  const int p = fmt.sig_bits();
  const long bl = static_cast<long>(boost::multiprecision::msb(x.mantissa)) + 1;
  long e = bl - 1 + x.scale;  // exponent of the leading bit
  uint64_t sig;
  if (bl <= p) {
    sig = x.mantissa.convert_to<uint64_t>() << (p - bl);
  } else {
    const long shift = bl - p;
    BigInt keep = x.mantissa >> shift;
    const BigInt rem = x.mantissa - (keep << shift);
    const BigInt half = BigInt(1) << (shift - 1);
    if (rem > half || (rem == half && boost::multiprecision::bit_test(keep, 0))) {
      ++keep;
    }
    if (boost::multiprecision::bit_test(keep, unsigned(p))) {
      keep >>= 1;
      ++e;
    }
    sig = keep.convert_to<uint64_t>();
  }

  if (e > fmt.max_exp()) return FpValue::inf(x.sign);
  if (e < fmt.min_exp()) return FpValue::zero(x.sign);

  FpValue v;
  v.cls = FpClass::Normal;
  v.sign = x.sign;
  v.exponent = static_cast<int>(e);
  v.significand = sig;
  v.sig_bits = p;
  return v;
}

}  // namespace fpan
