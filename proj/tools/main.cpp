// fpan: reduced-precision matrix-engine emulator with approximate
// normalization. Subcommands: fma, matmul, hist, sweep, oracle-check.

#include <charconv>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fpan/analysis.hpp"
#include "fpan/cli.hpp"
#include "fpan/systolic.hpp"

using namespace fpan;

namespace {

struct CommonOpts {
  std::string format = "bf16";
  std::string norm = "accurate";
  FloatFormat fmt;
  cli::NormSpec norm_spec;
};

// Returns false (after printing) on a bad --format/--norm value.
bool resolve_common(CommonOpts& o) {
  const auto fmt = cli::parse_format(o.format);
  if (!fmt) {
    std::cerr << "bad --format value: '" << o.format << "'\n";
    return false;
  }
  const auto norm = cli::parse_norm(o.norm);
  if (!norm) {
    std::cerr << "bad --norm value: '" << o.norm << "'\n";
    return false;
  }
  if (norm->mode == NormMode::Approx && norm->k + norm->lambda > 2 * fmt->sig_bits()) {
    std::cerr << "--norm " << o.norm << ": k+lambda exceeds the accumulator width of "
              << cli::format_to_string(*fmt) << "\n";
    return false;
  }
  o.fmt = *fmt;
  o.norm_spec = *norm;
  return true;
}

PEConfig pe_config(const CommonOpts& o) {
  return o.norm_spec.mode == NormMode::Accurate
             ? PEConfig::accurate(o.fmt)
             : PEConfig::approx(o.fmt, o.norm_spec.k, o.norm_spec.lambda);
}

bool parse_bits(const std::string& tok, const FloatFormat& fmt, uint32_t& out) {
  uint64_t bits = 0;
  const bool hex = tok.starts_with("0x") || tok.starts_with("0X");
  const char* begin = tok.data() + (hex ? 2 : 0);
  auto r = std::from_chars(begin, tok.data() + tok.size(), bits, hex ? 16 : 10);
  if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size()) return false;
  if (bits >= (uint64_t{1} << fmt.total_bits())) return false;
  out = static_cast<uint32_t>(bits);
  return true;
}

bool parse_range(const std::string& spec, std::vector<int>& out) {
  const size_t colon = spec.find(':');
  int lo = 0, hi = 0;
  if (colon == std::string::npos) {
    auto r = std::from_chars(spec.data(), spec.data() + spec.size(), lo);
    if (r.ec != std::errc{} || r.ptr != spec.data() + spec.size()) return false;
    hi = lo;
  } else {
    auto r1 = std::from_chars(spec.data(), spec.data() + colon, lo);
    auto r2 = std::from_chars(spec.data() + colon + 1, spec.data() + spec.size(), hi);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r1.ptr != spec.data() + colon ||
        r2.ptr != spec.data() + spec.size()) {
      return false;
    }
  }
  if (lo > hi) return false;
  for (int v = lo; v <= hi; ++v) out.push_back(v);
  return true;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bit-accurate emulator of reduced-precision matrix engines with "
               "approximate normalization"};
  app.require_subcommand(1);

  CommonOpts common;

  // fma A B C
  auto* fma_cmd = app.add_subcommand("fma", "Run a single FMA and print its trace");
  std::string fma_a, fma_b;
  double fma_c = 0.0;
  bool fma_json = false;
  fma_cmd->add_option("a", fma_a, "operand A bits (hex or decimal)")->required();
  fma_cmd->add_option("b", fma_b, "operand B bits (hex or decimal)")->required();
  fma_cmd->add_option("c", fma_c, "partial-sum value (decimal)")->required();
  fma_cmd->add_flag("--json", fma_json, "emit JSON");

  // matmul X W
  auto* mm_cmd = app.add_subcommand("matmul", "Emulate a matrix multiplication");
  std::string mm_x, mm_w, mm_out, mm_trace_out, mm_array = "8x8";
  bool mm_trace = false;
  mm_cmd->add_option("x", mm_x, "left matrix file")->required();
  mm_cmd->add_option("w", mm_w, "weight matrix file")->required();
  mm_cmd->add_option("--out", mm_out, "output matrix file (.hex for bit-exact)")->required();
  mm_cmd->add_option("--array", mm_array, "array dims RxC (rows set the tile height)");
  mm_cmd->add_flag("--trace", mm_trace, "collect per-FMA normalization traces");
  mm_cmd->add_option("--trace-out", mm_trace_out, "shift-histogram JSON path");

  // hist
  auto* hist_cmd = app.add_subcommand(
      "hist", "Shift histogram of the attention-layer proxy workload");
  int hist_seq = 64, hist_dmodel = 64;
  uint64_t hist_seed = 1;
  std::string hist_out;
  hist_cmd->add_option("--seq", hist_seq, "sequence length (<= 256)");
  hist_cmd->add_option("--dmodel", hist_dmodel, "model width (<= 256)");
  hist_cmd->add_option("--seed", hist_seed, "workload seed");
  hist_cmd->add_option("--out", hist_out, "histogram JSON path (stdout if omitted)");

  // sweep
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "(k, lambda) design-space sweep over seeded Gaussian matmuls");
  std::string sweep_k = "1:3", sweep_l = "1:3", sweep_ref = "exact", sweep_out;
  int sweep_m = 64, sweep_n = 64, sweep_depth = 64, sweep_instances = 10;
  uint64_t sweep_seed = 1;
  sweep_cmd->add_option("--k-range", sweep_k, "k values, N or LO:HI");
  sweep_cmd->add_option("--lambda-range", sweep_l, "lambda values, N or LO:HI");
  sweep_cmd->add_option("--m", sweep_m, "output rows");
  sweep_cmd->add_option("--n", sweep_n, "output cols");
  sweep_cmd->add_option("--depth", sweep_depth, "reduction depth K");
  sweep_cmd->add_option("--instances", sweep_instances, "matmul instances");
  sweep_cmd->add_option("--seed", sweep_seed, "workload seed");
  sweep_cmd->add_option("--ref", sweep_ref, "error reference: exact | accurate");
  sweep_cmd->add_option("--out", sweep_out, "CSV path (.json for JSON; stdout if omitted)");

  // oracle-check
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Run the property oracles");
  bool oracle_full = false;
  oracle_cmd->add_flag("--full", oracle_full, "complete exhaustive sweep");

  for (auto* sub : {fma_cmd, mm_cmd, hist_cmd, sweep_cmd}) {
    sub->add_option("--format", common.format, "fp32 | bf16 | e4m3 | e5m2 | custom:E,M");
    sub->add_option("--norm", common.norm, "accurate | an-K-L");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitParse;
  }

  try {
    if (app.got_subcommand(oracle_cmd)) {
      return cli::run_oracle_check(oracle_full, std::cout);
    }
    if (!resolve_common(common)) return cli::kExitParse;

    if (app.got_subcommand(fma_cmd)) {
      uint32_t a = 0, b = 0;
      if (!parse_bits(fma_a, common.fmt, a)) {
        std::cerr << "bad operand token: '" << fma_a << "'\n";
        return cli::kExitParse;
      }
      if (!parse_bits(fma_b, common.fmt, b)) {
        std::cerr << "bad operand token: '" << fma_b << "'\n";
        return cli::kExitParse;
      }
      const cli::FmaResult r = cli::run_fma(a, b, fma_c, common.fmt, common.norm_spec);
      if (fma_json) {
        nlohmann::json j{{"schema_version", cli::kSchemaVersion},
                         {"format", cli::format_to_string(common.fmt)},
                         {"norm", cli::norm_to_string(common.norm_spec)},
                         {"result_bits", r.out_bits},
                         {"applied_shift", r.trace.applied_shift},
                         {"accurate_shift", r.trace.accurate_shift},
                         {"carry_right_shift", r.trace.carry_right_shift},
                         {"unnormalized", r.trace.unnormalized},
                         {"zero_sum", r.trace.zero_sum}};
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "config: format=" << cli::format_to_string(common.fmt)
                  << " norm=" << cli::norm_to_string(common.norm_spec) << "\n"
                  << cli::describe_fma(r, common.fmt);
      }
      return cli::kExitOk;
    }

    if (app.got_subcommand(mm_cmd)) {
      const auto dims = cli::parse_array_dims(mm_array);
      if (!dims) {
        std::cerr << "bad --array value: '" << mm_array << "'\n";
        return cli::kExitParse;
      }
      const MatrixF x = cli::load_matrix(mm_x, common.fmt);
      const MatrixF w = cli::load_matrix(mm_w, common.fmt);
      const ArrayConfig cfg{dims->first, dims->second, pe_config(common)};
      const MatmulReport rep = matmul(x, w, cfg, mm_trace);
      cli::save_matrix(rep.output, mm_out);
      std::cout << "matmul " << x.rows << "x" << x.cols << " * " << w.rows << "x"
                << w.cols << " norm=" << cli::norm_to_string(common.norm_spec)
                << " fma_events=" << rep.stats.total
                << " unnormalized=" << rep.stats.unnormalized_events << "\n";
      if (!mm_trace_out.empty()) {
        if (!mm_trace) {
          std::cerr << "--trace-out requires --trace\n";
          return cli::kExitValidation;
        }
        write_text(mm_trace_out, cli::histogram_json(rep.stats).dump(2) + "\n");
      }
      return cli::kExitOk;
    }

    if (app.got_subcommand(hist_cmd)) {
      const ArrayConfig cfg{hist_seq, hist_seq, pe_config(common)};
      const auto reports = attention_workload(hist_seq, hist_dmodel, hist_seed, cfg,
                                              /*trace=*/true);
      const ShiftHistogram h = shift_histogram(reports);
      const std::string text = cli::histogram_json(h).dump(2) + "\n";
      if (hist_out.empty()) {
        std::cout << text;
      } else {
        write_text(hist_out, text);
      }
      return cli::kExitOk;
    }

    if (app.got_subcommand(sweep_cmd)) {
      std::vector<int> ks, ls;
      if (!parse_range(sweep_k, ks) || !parse_range(sweep_l, ls)) {
        std::cerr << "bad range (want N or LO:HI)\n";
        return cli::kExitParse;
      }
      if (sweep_ref != "exact" && sweep_ref != "accurate") {
        std::cerr << "bad --ref value: '" << sweep_ref << "'\n";
        return cli::kExitParse;
      }
      if (sweep_m < 1 || sweep_n < 1 || sweep_depth < 1 || sweep_instances < 1) {
        std::cerr << "sweep dimensions must be positive\n";
        return cli::kExitValidation;
      }
      std::mt19937_64 rng(sweep_seed);
      std::vector<MatmulJob> jobs;
      for (int i = 0; i < sweep_instances; ++i) {
        jobs.push_back({gaussian_matrix(sweep_m, sweep_depth, common.fmt, rng),
                        gaussian_matrix(sweep_depth, sweep_n, common.fmt, rng)});
      }
      const SweepResult res =
          sweep(ks, ls, jobs, common.fmt,
                sweep_ref == "exact" ? RefMode::Exact : RefMode::Accurate);
      for (const auto& [k, l] : res.skipped) {
        std::cerr << "skipping invalid configuration an-" << k << "-" << l << "\n";
      }
      std::string text;
      if (sweep_out.ends_with(".json")) {
        nlohmann::json rows = nlohmann::json::array();
        for (const SweepRow& row : res.rows) {
          rows.push_back({{"k", row.k},
                          {"lambda", row.lambda},
                          {"error", cli::error_report_json(row.error)},
                          {"hist", cli::histogram_json(row.hist)}});
        }
        text = nlohmann::json{{"schema_version", cli::kSchemaVersion}, {"rows", rows}}
                   .dump(2) +
               "\n";
      } else {
        text = cli::sweep_csv(res);
      }
      if (sweep_out.empty()) {
        std::cout << text;
      } else {
        write_text(sweep_out, text);
      }
      return cli::kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitValidation;
  }
  return cli::kExitOk;
}
