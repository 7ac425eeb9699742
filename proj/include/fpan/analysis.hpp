#pragma once

// Error metrics against the exact oracle (or an accurate-mode reference),
// normalization-shift histograms, and (k, lambda) design-space sweeps.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fpan/formats.hpp"
#include "fpan/systolic.hpp"

namespace fpan {

struct ErrorReport {
  double max_abs_rel_error = 0.0;
  double mean_abs_rel_error = 0.0;
  // ULP distance in the output format -> element count. Disagreeing
  // special values land in the kSpecialBin entry.
  std::map<uint64_t, uint64_t> ulp_histogram;
  double mismatch_rate = 0.0;
  uint64_t mismatches = 0;
  uint64_t elements = 0;
  uint64_t nan_inf_disagreements = 0;
  // bookkeeping for pooled means
  uint64_t compared = 0;
  double sum_abs_rel_error = 0.0;

  static constexpr uint64_t kSpecialBin = ~uint64_t{0};
};

// Per-element relative error of out_a against the exact reference when given,
// otherwise against out_ref's decoded value; absolute error where the
// reference is zero. Throws std::invalid_argument on shape mismatch.
ErrorReport compare(const MatrixF& out_a, const MatrixF& out_ref,
                    const std::vector<ExactDyadic>* exact_ref = nullptr);

// Pools two reports over disjoint element sets.
ErrorReport merge(const ErrorReport& a, const ErrorReport& b);

// Aggregates the per-FMA shift statistics of traced matmuls. Throws
// std::invalid_argument on empty input.
ShiftHistogram shift_histogram(std::span<const MatmulReport> reports);

// Exact reference for a matmul: row-major exact dot products.
std::vector<ExactDyadic> exact_matmul(const MatrixF& x, const MatrixF& w);

enum class RefMode { Accurate, Exact };

struct MatmulJob {
  MatrixF x;
  MatrixF w;
};

struct SweepRow {
  int k = 0;
  int lambda = 0;
  ErrorReport error;
  ShiftHistogram hist;
};

struct SweepResult {
  std::vector<SweepRow> rows;                  // ordered by (k, lambda)
  std::vector<std::pair<int, int>> skipped;    // invalid combinations
};

SweepResult sweep(std::span<const int> ks, std::span<const int> lambdas,
                  std::span<const MatmulJob> jobs, const FloatFormat& fmt,
                  RefMode ref_mode);

}  // namespace fpan
