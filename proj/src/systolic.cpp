#include "fpan/systolic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fpan {

MatrixF MatrixF::transposed() const {
  MatrixF t(cols, rows, fmt);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) t.at(j, i) = at(i, j);
  return t;
}

uint32_t south_round(const InternalSum& s, const FloatFormat& fmt) {
  switch (s.cls) {
    case FpClass::NaN:
      return encode(FpValue::nan(), fmt);
    case FpClass::Inf:
      return encode(FpValue::inf(s.sign), fmt);
    case FpClass::Zero:
      return encode(FpValue::zero(s.sign), fmt);
    case FpClass::Normal:
      break;
  }
  if (s.significand == 0) return encode(FpValue::zero(s.sign), fmt);

  const int acc = 2 * fmt.sig_bits();
  // One accurate normalization per column, even when the PEs ran approximate.
  const int lz = acc - std::bit_width(s.significand);
  FpValue v;
  v.cls = FpClass::Normal;
  v.sign = s.sign;
  v.exponent = s.exponent - lz;
  v.significand = s.significand << lz;
  v.sig_bits = acc;
  return encode(v, fmt);
}

namespace {

void check_matrix(const MatrixF& m, const char* name) {
  if (m.data.size() != static_cast<size_t>(m.rows) * m.cols) {
    throw std::invalid_argument(std::string(name) + ": data length != rows*cols");
  }
  const uint64_t limit = uint64_t{1} << m.fmt.total_bits();
  for (size_t idx = 0; idx < m.data.size(); ++idx) {
    if (m.data[idx] >= limit) {
      throw std::domain_error(std::string(name) + ": element at row " +
                              std::to_string(idx / m.cols) + ", col " +
                              std::to_string(idx % m.cols) +
                              " does not fit the format");
    }
  }
}

}  // namespace

MatmulReport matmul(const MatrixF& x, const MatrixF& w, const ArrayConfig& cfg,
                    bool trace) {
  if (x.cols != w.rows) throw std::invalid_argument("matmul: inner dimensions disagree");
  check_matrix(x, "x");
  check_matrix(w, "w");

  const int m = x.rows, k = x.cols, n = w.cols;
  MatmulReport rep;
  rep.output = MatrixF(m, n, cfg.pe.fmt);
  rep.traced = trace;
  if (trace) rep.traces.resize(static_cast<size_t>(m) * n);

  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      InternalSum acc = InternalSum::zero();
      // Vertical tiling: the extended partial sum re-enters the next tile
      // unrounded, so tile boundaries are numerically invisible.
      for (int tile = 0; tile < k; tile += cfg.rows) {
        const int tile_end = std::min(tile + cfg.rows, k);
        for (int t = tile; t < tile_end; ++t) {
          const FpValue a = decode(x.at(i, t), cfg.pe.fmt);
          const FpValue b = decode(w.at(t, j), cfg.pe.fmt);
          auto [next, tr] = pe_fma(a, b, acc, cfg.pe);
          acc = next;
          if (trace) rep.traces[static_cast<size_t>(i) * n + j].push_back(tr);
          rep.stats.add(tr);
        }
      }
      rep.output.at(i, j) = south_round(acc, cfg.pe.fmt);
    }
  }
  return rep;
}

MatrixF gaussian_matrix(int rows, int cols, const FloatFormat& fmt, std::mt19937_64& rng) {
  MatrixF m(rows, cols, fmt);
  auto uniform01 = [&rng]() {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;  // in (0, 1)
  };
  bool have_spare = false;
  double spare = 0.0;
  for (auto& bits : m.data) {
    double z;
    if (have_spare) {
      z = spare;
      have_spare = false;
    } else {
      const double r = std::sqrt(-2.0 * std::log(uniform01()));
      const double theta = 2.0 * std::numbers::pi * uniform01();
      z = r * std::cos(theta);
      spare = r * std::sin(theta);
      have_spare = true;
    }
    bits = encode(round_exact(ExactDyadic::from_double(z), fmt), fmt);
  }
  return m;
}

namespace {

double decoded_value(uint32_t bits, const FloatFormat& fmt) {
  const FpValue v = decode(bits, fmt);
  if (v.cls == FpClass::Zero) return 0.0;
  return to_exact(v).to_double();
}

// Row softmax on the decoded scores, scaled by 1/sqrt(d); stays outside the
// emulated datapath.
MatrixF softmax_scaled(const MatrixF& scores, int d_model) {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d_model));
  MatrixF out(scores.rows, scores.cols, scores.fmt);
  std::vector<double> row(scores.cols);
  for (int i = 0; i < scores.rows; ++i) {
    double max_v = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < scores.cols; ++j) {
      row[j] = decoded_value(scores.at(i, j), scores.fmt) * inv_sqrt_d;
      max_v = std::max(max_v, row[j]);
    }
    double denom = 0.0;
    for (double& v : row) {
      v = std::exp(v - max_v);
      denom += v;
    }
    for (int j = 0; j < scores.cols; ++j) {
      out.at(i, j) =
          encode(round_exact(ExactDyadic::from_double(row[j] / denom), scores.fmt),
                 scores.fmt);
    }
  }
  return out;
}

}  // namespace

std::vector<MatmulReport> attention_workload(int seq_len, int d_model, uint64_t seed,
                                             const ArrayConfig& cfg, bool trace) {
  if (seq_len < 1 || seq_len > 256 || d_model < 1 || d_model > 256) {
    throw std::invalid_argument("attention_workload: dimensions must be in [1, 256]");
  }
  std::mt19937_64 rng(seed);
  const FloatFormat& fmt = cfg.pe.fmt;
  const MatrixF q = gaussian_matrix(seq_len, d_model, fmt, rng);
  const MatrixF kmat = gaussian_matrix(seq_len, d_model, fmt, rng);
  const MatrixF v = gaussian_matrix(seq_len, d_model, fmt, rng);
  const MatrixF w_out = gaussian_matrix(d_model, d_model, fmt, rng);

  std::vector<MatmulReport> reports;
  reports.push_back(matmul(q, kmat.transposed(), cfg, trace));        // scores
  const MatrixF p = softmax_scaled(reports[0].output, d_model);
  reports.push_back(matmul(p, v, cfg, trace));                        // context
  reports.push_back(matmul(reports[1].output, w_out, cfg, trace));    // projection
  return reports;
}

}  // namespace fpan
