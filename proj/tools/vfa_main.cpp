// vfa: attention kernel lab driver.
//
// Subcommands:
//   gen     write a deterministic matrix file for a seed
//   run     execute one implementation, optionally checked against the
//           64-bit reference, and write a machine-readable report
//   sweep   run a list of requests from a JSON config, emit a report table
//   experr  relative-error sweep of the approximate exponential
//
// Exit status: 0 success, 1 usage/configuration error, 2 accuracy-check
// failure, 3 numeric error.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vfa/harness.hpp"
#include "vfa/matrix_io.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCheckFailed = 2;
constexpr int kExitNumeric = 3;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw vfa::ConfigError("cannot open " + path + " for writing");
  f << text;
  if (!f) throw vfa::ConfigError("short write to " + path);
}

void emit_report(const std::string& text, const std::string& path) {
  if (path.empty())
    std::cout << text << "\n";
  else
    write_text(path, text + "\n");
}

struct RunFlags {
  vfa::RunRequest req;
  std::string report_path;
  std::string format = "json";
  std::string exp_mode = "exact";
};

void add_run_options(CLI::App* cmd, RunFlags& rf) {
  cmd->add_option("--impl", rf.req.impl,
                  "baseline | lazy | flash-scalar | flash-blocked | flash-vec | "
                  "flash-vec-tiled | flash-vec-mq")
      ->capture_default_str();
  cmd->add_option("--seq-len", rf.req.seq_len, "sequence length N (generator input)");
  cmd->add_option("--head-dim", rf.req.head_dim, "head dimension d (generator input)");
  cmd->add_option("--seed", rf.req.seed, "generator seed; Q/K/V use seed, seed+1, seed+2")
      ->capture_default_str();
  cmd->add_option("--q", rf.req.q_path, "query matrix file (N x d)");
  cmd->add_option("--k", rf.req.k_path, "key matrix file (N x d; transposed at ingestion)");
  cmd->add_option("--v", rf.req.v_path, "value matrix file (N x d)");
  cmd->add_option("--vlen", rf.req.config.vlen, "vector length in 32-bit lanes")
      ->capture_default_str();
  cmd->add_option("--br", rf.req.config.br, "query-row block size (flash-vec-mq)")
      ->capture_default_str();
  cmd->add_option("--unroll", rf.req.config.unroll, "head-dimension chunks kept in registers")
      ->capture_default_str();
  cmd->add_option("--exp", rf.exp_mode, "exponential mode: exact | approx")
      ->check(CLI::IsMember({"exact", "approx"}))
      ->capture_default_str();
  cmd->add_flag("--scale", rf.req.config.scale_scores, "scale scores by 1/sqrt(d)");
  cmd->add_flag("--check", rf.req.check, "compare against the 64-bit reference");
  cmd->add_option("--tolerance", rf.req.tolerance, "max relative error allowed with --check")
      ->capture_default_str();
  cmd->add_flag("--timing", rf.req.timing, "include wall time in the report");
  cmd->add_option("--out", rf.req.out_path, "output matrix file");
  cmd->add_option("--report", rf.report_path, "report file (stdout when omitted)");
  cmd->add_option("--format", rf.format, "report format: json | csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

vfa::RunRequest finalize_request(RunFlags& rf) {
  rf.req.config.exp_mode =
      rf.exp_mode == "approx" ? vfa::ExpMode::approx : vfa::ExpMode::exact;
  return rf.req;
}

int check_verdict(const vfa::RunReport& rep) {
  if (!rep.errors) return kExitOk;
  if (rep.errors->max_rel <= rep.request.tolerance) return kExitOk;
  std::cerr << "accuracy check failed: max relative error " << rep.errors->max_rel
            << " exceeds tolerance " << rep.request.tolerance << "\n";
  return kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-head attention kernel lab: vectorized online-softmax kernels on a "
               "countable vector-engine model"};
  app.require_subcommand(1);

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "generate a deterministic matrix file");
  std::size_t gen_rows = 0, gen_cols = 0;
  std::uint64_t gen_seed = 1;
  std::string gen_out, gen_dist = "uniform";
  gen->add_option("--rows", gen_rows, "row count")->required();
  gen->add_option("--cols", gen_cols, "column count")->required();
  gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen->add_option("--dist", gen_dist, "distribution (uniform over [-1, 1))")
      ->check(CLI::IsMember({"uniform"}))
      ->capture_default_str();
  gen->add_option("--out", gen_out, "output file")->required();

  // --- run ---
  auto* run = app.add_subcommand("run", "run one implementation and report");
  RunFlags run_flags;
  add_run_options(run, run_flags);

  // --- sweep ---
  auto* sweep = app.add_subcommand("sweep", "run a JSON list of requests");
  std::string sweep_config, sweep_report, sweep_format = "json";
  sweep->add_option("--config", sweep_config, "JSON array of run requests")->required();
  sweep->add_option("--report", sweep_report, "report file (stdout when omitted)");
  sweep->add_option("--format", sweep_format, "report format: json | csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  // --- experr ---
  auto* experr = app.add_subcommand("experr", "exponential approximation error sweep");
  std::size_t err_samples = 1000000;
  double err_lo = -15.0, err_hi = 0.0;
  std::uint64_t err_seed = 1;
  std::string err_report;
  experr->add_option("--samples", err_samples, "number of uniform samples")
      ->capture_default_str();
  experr->add_option("--domain-min", err_lo, "domain lower bound")->capture_default_str();
  experr->add_option("--domain-max", err_hi, "domain upper bound (<= 0)")
      ->capture_default_str();
  experr->add_option("--seed", err_seed, "sampling seed")->capture_default_str();
  experr->add_option("--report", err_report, "report file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const vfa::Matrix m = vfa::gen_matrix(gen_rows, gen_cols, gen_seed);
      vfa::write_matrix_file(m, gen_out);
      const auto bytes = vfa::matrix_to_bytes(m);
      char csum[32];
      std::snprintf(csum, sizeof csum, "%016llx",
                    static_cast<unsigned long long>(vfa::fnv1a64(bytes)));
      std::cout << gen_out << " " << gen_rows << "x" << gen_cols << " seed=" << gen_seed
                << " fnv1a64=" << csum << "\n";
      return kExitOk;
    }

    if (run->parsed()) {
      const vfa::RunRequest req = finalize_request(run_flags);
      const vfa::RunReport rep = vfa::execute_run(req);
      if (run_flags.format == "csv")
        emit_report(vfa::RunReport::csv_header() + "\n" + rep.csv_row(), run_flags.report_path);
      else
        emit_report(rep.to_json().dump(2), run_flags.report_path);
      if (rep.wall_ms) std::cerr << "wall_ms " << *rep.wall_ms << "\n";
      return check_verdict(rep);
    }

    if (sweep->parsed()) {
      std::ifstream f(sweep_config);
      if (!f) throw vfa::ConfigError("cannot open sweep config " + sweep_config);
      nlohmann::json cfg = nlohmann::json::parse(f);
      if (!cfg.is_array()) throw vfa::ConfigError("sweep config must be a JSON array");
      std::vector<vfa::RunRequest> reqs;
      for (const auto& item : cfg) reqs.push_back(vfa::request_from_json(item));
      const auto reports = vfa::execute_sweep(reqs);
      if (sweep_format == "csv")
        emit_report(vfa::sweep_to_csv(reports), sweep_report);
      else
        emit_report(vfa::sweep_to_json(reports).dump(2), sweep_report);
      int verdict = kExitOk;
      for (const auto& rep : reports) verdict = std::max(verdict, check_verdict(rep));
      return verdict;
    }

    if (experr->parsed()) {
      const auto rep = vfa::experr_report(err_samples, err_lo, err_hi, err_seed);
      emit_report(rep.dump(2), err_report);
      return kExitOk;
    }
  } catch (const vfa::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const vfa::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
