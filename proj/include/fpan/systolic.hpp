#pragma once

// Functional model of a weight-stationary systolic array. Weights stay
// resident, partial sums flow north->south through a column of FMA PEs, and
// rounding happens exactly once at the south end. Reductions deeper than the
// array are vertically tiled with the extended-precision partial sum passed
// between tiles.

#include <cstdint>
#include <random>
#include <vector>

#include "fpan/formats.hpp"
#include "fpan/pe.hpp"

namespace fpan {

struct ArrayConfig {
  int rows = 1;
  int cols = 1;
  PEConfig pe;
};

/// Matrix of format bit patterns, row-major.
struct MatrixF {
  int rows = 0;
  int cols = 0;
  FloatFormat fmt;
  std::vector<uint32_t> data;

  MatrixF() = default;
  MatrixF(int r, int c, const FloatFormat& f)
      : rows(r), cols(c), fmt(f), data(static_cast<size_t>(r) * c, 0) {}

  uint32_t& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  uint32_t at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  MatrixF transposed() const;
};

struct MatmulReport {
  MatrixF output;
  bool traced = false;
  // Row-major per output element; each inner vector holds K traces in
  // accumulation order.
  std::vector<std::vector<NormTrace>> traces;
  ShiftHistogram stats;
};

// out[i][j] = south_round(fold of pe_fma over t ascending, seeded with zero).
// Throws std::invalid_argument on dimension mismatch and std::domain_error
// (naming the index) on an element that does not fit the format's bit width.
MatmulReport matmul(const MatrixF& x, const MatrixF& w, const ArrayConfig& cfg,
                    bool trace = false);

// Fully normalizes the extended partial sum (one exact leading-zero count per
// column) and rounds nearest-even into fmt.
uint32_t south_round(const InternalSum& s, const FloatFormat& fmt);

// Deterministic Gaussian(0,1) matrix in the given format. Box-Muller over the
// raw engine output, so results do not depend on libstdc++ distribution
// internals.
MatrixF gaussian_matrix(int rows, int cols, const FloatFormat& fmt, std::mt19937_64& rng);

// Desk-scale attention-layer proxy: Q.K^T, softmax (computed outside the
// emulated datapath, in double), P.V, then an output projection. Returns the
// three matmul reports in order.
std::vector<MatmulReport> attention_workload(int seq_len, int d_model, uint64_t seed,
                                             const ArrayConfig& cfg, bool trace = false);

}  // namespace fpan
