#pragma once

#include <cstdint>
#include <vector>

#include "vfa/attention.hpp"
#include "vfa/engine.hpp"
#include "vfa/exp_approx.hpp"

namespace vfa {

enum class ExpMode { exact, approx };

struct KernelConfig {
  std::uint32_t vlen = 32;
  // Query-row block size: rows processed per K/V block before the block
  // advances. Only the multi-query kernel uses it.
  std::uint32_t br = 1;
  // Head-dimension chunks kept register-resident. When unroll covers every
  // chunk the intermediate output spills are elided; otherwise each chunk
  // round-trips memory once per key block.
  std::uint32_t unroll = 1;
  ExpMode exp_mode = ExpMode::exact;
  bool scale_scores = false;

  // Key-column block size; fixed to the vector length.
  std::uint32_t bc() const noexcept { return vlen; }
};

struct KernelRun {
  Matrix output;  // N x d
  ExecStats stats;
  std::vector<float> row_max;  // final running max per query row
  std::vector<float> row_sum;  // final exponent sum per query row
};

/// Vectorized online-softmax attention for head dimensions that fit in one
/// vector register (d <= vlen). Per query: row-wise score accumulation over
/// a key block, max reduction, exponentials of the score differences, the
/// lookahead-masked rescaling of the running sum and output, one division.
KernelRun flash_vec(const AttentionProblem& p, const KernelConfig& cfg, Engine& engine);

/// Adds head-dimension chunk loops for d > vlen (d <= vlen falls back to the
/// flash_vec schedule). With unroll < ceil(d/vlen) every output chunk is
/// stored and reloaded once per (query, key block); with full unroll the
/// chunks stay in registers and only the final stores remain.
KernelRun flash_vec_tiled(const AttentionProblem& p, const KernelConfig& cfg, Engine& engine);

/// Processes br query rows per K/V block: inside a (row block, column block)
/// pair each K/V vector is loaded once and reused for all rows, so K/V load
/// counts drop by a factor of br while per-row results stay bit-identical.
/// Per-row running max / exponent-sum state persists across column blocks.
KernelRun flash_vec_multiquery(const AttentionProblem& p, const KernelConfig& cfg,
                               Engine& engine);

}  // namespace vfa
