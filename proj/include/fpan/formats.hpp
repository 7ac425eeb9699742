#pragma once

// Parametric floating-point formats, bit-level encode/decode, and an exact
// dyadic-rational type used as the reference for all error measurements.

#include <cstdint>
#include <span>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace fpan {

using BigInt = boost::multiprecision::cpp_int;

/// Interchange format description: 1 sign bit, exp_bits exponent bits,
/// man_bits stored mantissa bits. Bias is fixed at 2^(exp_bits-1)-1.
struct FloatFormat {
  int exp_bits = 8;
  int man_bits = 7;

  FloatFormat() = default;
  FloatFormat(int e, int m);

  int bias() const { return (1 << (exp_bits - 1)) - 1; }
  int total_bits() const { return 1 + exp_bits + man_bits; }
  int sig_bits() const { return man_bits + 1; }  // mantissa + hidden bit
  int min_exp() const { return 1 - bias(); }     // smallest normal exponent
  int max_exp() const { return ((1 << exp_bits) - 2) - bias(); }

  uint32_t man_mask() const { return (1u << man_bits) - 1u; }
  uint32_t exp_mask() const { return (1u << exp_bits) - 1u; }
  uint32_t sign_mask() const { return 1u << (exp_bits + man_bits); }

  static FloatFormat fp32() { return {8, 23}; }
  static FloatFormat bf16() { return {8, 7}; }
  static FloatFormat e4m3() { return {4, 3}; }
  static FloatFormat e5m2() { return {5, 2}; }

  bool operator==(const FloatFormat&) const = default;
};

enum class FpClass { Zero, Normal, Inf, NaN };

/// Decoded operand. For Normal values the significand carries an explicit
/// leading 1 in bit (sig_bits-1): value = sign * significand * 2^(exponent-(sig_bits-1)).
struct FpValue {
  FpClass cls = FpClass::Zero;
  int sign = +1;            // +1 or -1
  int exponent = 0;         // unbiased
  uint64_t significand = 0;
  int sig_bits = 0;

  static FpValue zero(int sign = +1) { return {FpClass::Zero, sign, 0, 0, 0}; }
  static FpValue inf(int sign) { return {FpClass::Inf, sign, 0, 0, 0}; }
  static FpValue nan() { return {FpClass::NaN, +1, 0, 0, 0}; }

  bool is_special() const { return cls == FpClass::Inf || cls == FpClass::NaN; }

  bool operator==(const FpValue&) const = default;
};

// Subnormal encodings flush to signed zero; all-ones exponent decodes to
// Inf/NaN by mantissa.
FpValue decode(uint32_t bits, const FloatFormat& fmt);

// Round-to-nearest-even when the significand is wider than the format holds.
// Exponent overflow produces Inf, underflow below the minimum normal flushes
// to zero. NaN encodes as one canonical quiet-NaN pattern.
uint32_t encode(const FpValue& v, const FloatFormat& fmt);

/// Exact dyadic rational: sign * mantissa * 2^scale, with mantissa odd or
/// zero. Closed under addition and multiplication, no rounding anywhere.
struct ExactDyadic {
  int sign = +1;
  BigInt mantissa = 0;
  long scale = 0;

  static ExactDyadic zero() { return {}; }
  static ExactDyadic make(int sign, BigInt mantissa, long scale);
  static ExactDyadic from_double(double d);

  bool is_zero() const { return mantissa == 0; }
  double to_double() const;

  ExactDyadic operator+(const ExactDyadic& o) const;
  ExactDyadic operator-(const ExactDyadic& o) const;
  ExactDyadic operator*(const ExactDyadic& o) const;
  ExactDyadic negated() const;

  bool operator==(const ExactDyadic&) const = default;
};

// Rejects Inf/NaN with std::domain_error.
ExactDyadic to_exact(const FpValue& v);

// Mathematically exact sum of products. Throws std::invalid_argument on
// length mismatch or special-value elements.
ExactDyadic exact_dot(std::span<const FpValue> a, std::span<const FpValue> b);

// Nearest-even rounding into fmt with the same overflow/underflow policy as
// encode.
FpValue round_exact(const ExactDyadic& x, const FloatFormat& fmt);

}  // namespace fpan
