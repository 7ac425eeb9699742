#include "fpan/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace fpan {

namespace {

int64_t ordinal(uint32_t bits, const FloatFormat& fmt) {
  const int64_t mag = bits & (fmt.sign_mask() - 1);
  return (bits & fmt.sign_mask()) ? -mag : mag;
}

double decoded_value(const FpValue& v) {
  return v.cls == FpClass::Zero ? 0.0 : to_exact(v).to_double();
}

}  // namespace

ErrorReport compare(const MatrixF& out_a, const MatrixF& out_ref,
                    const std::vector<ExactDyadic>* exact_ref) {
  if (out_a.rows != out_ref.rows || out_a.cols != out_ref.cols) {
    throw std::invalid_argument("compare: shape mismatch");
  }
  if (exact_ref && exact_ref->size() != out_a.data.size()) {
    throw std::invalid_argument("compare: exact reference size mismatch");
  }

  ErrorReport rep;
  rep.elements = out_a.data.size();
  const FloatFormat& fmt = out_a.fmt;

  for (size_t idx = 0; idx < out_a.data.size(); ++idx) {
    const uint32_t ba = out_a.data[idx];
    const uint32_t br = out_ref.data[idx];
    const FpValue va = decode(ba, fmt);
    const FpValue vr = decode(br, fmt);

    if (ba != br) ++rep.mismatches;

    if (va.is_special() || vr.is_special()) {
      if (ba == br) {
        ++rep.ulp_histogram[0];
      } else {
        ++rep.nan_inf_disagreements;
        ++rep.ulp_histogram[ErrorReport::kSpecialBin];
      }
      continue;
    }

    ++rep.ulp_histogram[static_cast<uint64_t>(
        std::llabs(ordinal(ba, fmt) - ordinal(br, fmt)))];

    const double ref = exact_ref ? (*exact_ref)[idx].to_double() : decoded_value(vr);
    double err = std::fabs(decoded_value(va) - ref);
    if (ref != 0.0) err /= std::fabs(ref);
    rep.sum_abs_rel_error += err;
    rep.max_abs_rel_error = std::max(rep.max_abs_rel_error, err);
    ++rep.compared;
  }

  rep.mismatch_rate = rep.elements ? static_cast<double>(rep.mismatches) / rep.elements : 0.0;
  rep.mean_abs_rel_error = rep.compared ? rep.sum_abs_rel_error / rep.compared : 0.0;
  return rep;
}

ErrorReport merge(const ErrorReport& a, const ErrorReport& b) {
  ErrorReport r;
  r.elements = a.elements + b.elements;
  r.mismatches = a.mismatches + b.mismatches;
  r.nan_inf_disagreements = a.nan_inf_disagreements + b.nan_inf_disagreements;
  r.compared = a.compared + b.compared;
  r.sum_abs_rel_error = a.sum_abs_rel_error + b.sum_abs_rel_error;
  r.max_abs_rel_error = std::max(a.max_abs_rel_error, b.max_abs_rel_error);
  r.ulp_histogram = a.ulp_histogram;
  for (const auto& [k, v] : b.ulp_histogram) r.ulp_histogram[k] += v;
  r.mismatch_rate = r.elements ? static_cast<double>(r.mismatches) / r.elements : 0.0;
  r.mean_abs_rel_error = r.compared ? r.sum_abs_rel_error / r.compared : 0.0;
  return r;
}

ShiftHistogram shift_histogram(std::span<const MatmulReport> reports) {
  if (reports.empty()) throw std::invalid_argument("shift_histogram: empty input");
  ShiftHistogram h;
  for (const MatmulReport& r : reports) h.merge(r.stats);
  return h;
}

std::vector<ExactDyadic> exact_matmul(const MatrixF& x, const MatrixF& w) {
  if (x.cols != w.rows) throw std::invalid_argument("exact_matmul: inner dimensions disagree");
  std::vector<ExactDyadic> out;
  out.reserve(static_cast<size_t>(x.rows) * w.cols);
  std::vector<FpValue> row(x.cols), col(w.rows);
  for (int i = 0; i < x.rows; ++i) {
    for (int t = 0; t < x.cols; ++t) row[t] = decode(x.at(i, t), x.fmt);
    for (int j = 0; j < w.cols; ++j) {
      for (int t = 0; t < w.rows; ++t) col[t] = decode(w.at(t, j), w.fmt);
      out.push_back(exact_dot(row, col));
    }
  }
  return out;
}

SweepResult sweep(std::span<const int> ks, std::span<const int> lambdas,
                  std::span<const MatmulJob> jobs, const FloatFormat& fmt,
                  RefMode ref_mode) {
  SweepResult result;

  // References are config-independent; compute once per job.
  struct JobRef {
    MatrixF bits;
    std::vector<ExactDyadic> exact;
  };
  std::vector<JobRef> refs;
  refs.reserve(jobs.size());
  for (const MatmulJob& job : jobs) {
    JobRef ref;
    if (ref_mode == RefMode::Exact) {
      ref.exact = exact_matmul(job.x, job.w);
      ref.bits = MatrixF(job.x.rows, job.w.cols, fmt);
      for (size_t i = 0; i < ref.exact.size(); ++i) {
        ref.bits.data[i] = encode(round_exact(ref.exact[i], fmt), fmt);
      }
    } else {
      ArrayConfig acc_cfg{job.x.cols, job.w.cols, PEConfig::accurate(fmt)};
      ref.bits = matmul(job.x, job.w, acc_cfg).output;
    }
    refs.push_back(std::move(ref));
  }

  for (int k : ks) {
    for (int lambda : lambdas) {
      if (k < 1 || lambda < 1 || k + lambda > 2 * fmt.sig_bits()) {
        result.skipped.emplace_back(k, lambda);
        continue;
      }
      SweepRow row;
      row.k = k;
      row.lambda = lambda;
      const PEConfig pe = PEConfig::approx(fmt, k, lambda);
      for (size_t j = 0; j < jobs.size(); ++j) {
        ArrayConfig cfg{jobs[j].x.cols, jobs[j].w.cols, pe};
        const MatmulReport rep = matmul(jobs[j].x, jobs[j].w, cfg, /*trace=*/true);
        const ErrorReport err =
            compare(rep.output, refs[j].bits,
                    ref_mode == RefMode::Exact ? &refs[j].exact : nullptr);
        row.error = merge(row.error, err);
        row.hist.merge(rep.stats);
      }
      result.rows.push_back(std::move(row));
    }
  }
  std::sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::pair{a.k, a.lambda} < std::pair{b.k, b.lambda};
  });
  return result;
}

}  // namespace fpan
