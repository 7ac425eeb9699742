#pragma once

// Independent reference for the accurate-normalization datapath. Everything
// here is computed value-level with arbitrary-width integers: exact product,
// floor-truncating alignment, exact signed addition, normalization by bit
// length. It shares no code with the fixed-width register model in pe.cpp
// and exists to cross-check it bit for bit.

#include <cstdint>
#include <span>

#include "fpan/formats.hpp"
#include "fpan/pe.hpp"

namespace fpan::oracle {

// Accurate-mode pe_fma replay. Operands must be finite (Zero or Normal).
InternalSum replay_fma(const FpValue& a, const FpValue& b, const InternalSum& c,
                       const FloatFormat& fmt);

// Replays a whole accumulation column (ascending index order) and the final
// south-end rounding, returning format bits.
uint32_t replay_fold(std::span<const FpValue> a, std::span<const FpValue> b,
                     const FloatFormat& fmt);

}  // namespace fpan::oracle
