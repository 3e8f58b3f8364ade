#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vfa/attention.hpp"
#include "vfa/flash_kernel.hpp"

namespace vfa {

inline constexpr const char* kImplNames[] = {"baseline",  "lazy",           "flash-scalar",
                                             "flash-blocked", "flash-vec",  "flash-vec-tiled",
                                             "flash-vec-mq"};

struct RunRequest {
  std::string impl = "flash-vec";
  // Generator source: dimensions plus seed. File source: q/k/v paths.
  // Exactly one of the two must be configured.
  std::size_t seq_len = 0;
  std::size_t head_dim = 0;
  std::uint64_t seed = 1;
  std::string q_path, k_path, v_path;
  KernelConfig config;
  bool check = false;
  double tolerance = 1e-5;
  bool timing = false;  // include wall time in the report (breaks byte determinism)
  std::string out_path;

  bool file_source() const noexcept { return !q_path.empty() || !k_path.empty() || !v_path.empty(); }
  void validate() const;
};

struct ErrorMetrics {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  // Relative errors are normalized by the largest reference magnitude so a
  // near-zero output element cannot blow the metric up.
  double max_rel = 0.0;
  double mean_rel = 0.0;
};

struct RunReport {
  RunRequest request;
  bool vector_impl = false;
  ExecStats stats;                 // vector runs
  ScalarOpCount scalar_ops;        // flash_scalar reference count for this shape
  std::optional<double> speedup_proxy;  // scalar ops / vector instructions
  std::optional<ErrorMetrics> errors;   // present when check was requested
  std::optional<double> wall_ms;        // present when timing was requested

  // Flat key/value view; JSON objects and CSV rows hold identical values in
  // the documented column order.
  nlohmann::ordered_json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Loads or generates the problem for a request (generator sub-seeds are
/// seed, seed+1, seed+2 for Q, K, V).
AttentionProblem problem_for_request(const RunRequest& req);

/// Executes one request: runs the selected implementation, optionally checks
/// it against the 64-bit safe-softmax reference and writes the output matrix.
RunReport execute_run(const RunRequest& req);

std::vector<RunReport> execute_sweep(const std::vector<RunRequest>& reqs);

std::string sweep_to_csv(const std::vector<RunReport>& reports);
nlohmann::ordered_json sweep_to_json(const std::vector<RunReport>& reports);

RunRequest request_from_json(const nlohmann::json& j);

ErrorMetrics compare_to_reference(const Matrix& got, const Mat<double>& ref);

/// Relative-error sweep of the approximate exponential against the 64-bit
/// libm exponential: max/mean over uniform samples, the 16 points -k*ln2,
/// and (when the domain reaches below the clip threshold) the clipped region.
nlohmann::ordered_json experr_report(std::size_t samples, double domain_lo, double domain_hi,
                                     std::uint64_t seed);

}  // namespace vfa
