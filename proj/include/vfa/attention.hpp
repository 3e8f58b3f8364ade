#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "vfa/errors.hpp"
#include "vfa/matrix.hpp"

namespace vfa {

/// Single-head attention instance. Keys are stored pre-transposed (d x N) so
/// every kernel load is unit-stride; the transposition happens at ingestion
/// and is not counted as kernel work.
struct AttentionProblem {
  Matrix q;    // N x d query rows
  Matrix k_t;  // d x N, transpose of the N x d key matrix
  Matrix v;    // N x d value rows
  // Optional 1/sqrt(d) score scaling. Off by default: the reference
  // recurrences are stated without it.
  bool scale_scores = false;

  std::size_t seq_len() const noexcept { return q.rows(); }
  std::size_t head_dim() const noexcept { return q.cols(); }
  void validate() const;
};

/// Builds a problem from row-major Q, K, V all shaped N x d (K is transposed here).
AttentionProblem make_problem(Matrix q, Matrix k_rows, Matrix v, bool scale_scores = false);

/// Two-pass safe softmax attention: scores, max-shifted exponentials,
/// normalized weighted sum of value rows. T selects the arithmetic width;
/// Mat<double> with the libm exponential is the ground-truth reference.
/// score_bias is a test hook that adds a constant to every score.
template <typename T>
Mat<T> attention_safe(const AttentionProblem& p, T score_bias = T{0});

/// Lazy softmax division: pass 1 scores and running max, pass 2 accumulates
/// the weighted values and the exponent sum, one division at the end.
template <typename T>
Mat<T> attention_lazy(const AttentionProblem& p);

/// Single-pass online recurrence with running max m, exponent sum l and
/// output o, rescaled by e^(m_prev - m_new) each step.
template <typename T>
Mat<T> flash_scalar(const AttentionProblem& p);

/// Online recurrence applied to blocks of `block` consecutive keys with one
/// collective rescaling per block. A non-dividing N gets a shorter tail
/// block. block == 1 reproduces flash_scalar bit-for-bit; block == N computes
/// the safe softmax in a single block.
template <typename T>
Mat<T> flash_blocked(const AttentionProblem& p, std::size_t block);

/// Per-iteration running max / exponent-sum trace of flash_scalar for one
/// query row (test introspection).
template <typename T>
struct FlashTrace {
  std::vector<T> max_trace;
  std::vector<T> sum_trace;
};
template <typename T>
FlashTrace<T> flash_scalar_trace(const AttentionProblem& p, std::size_t row);

/// Exact count of scalar operations flash_scalar executes, by class.
struct ScalarOpCount {
  std::uint64_t multiply = 0;
  std::uint64_t add = 0;  // additions and subtractions
  std::uint64_t exp_calls = 0;
  std::uint64_t compare = 0;
  std::uint64_t divide = 0;
  std::uint64_t total() const noexcept { return multiply + add + exp_calls + compare + divide; }
  bool operator==(const ScalarOpCount&) const = default;
};

/// Closed form of the flash_scalar operation count; the denominator-free
/// reference for the vectorization speedup proxy.
ScalarOpCount scalar_flop_count(std::size_t seq_len, std::size_t head_dim,
                                bool scale_scores = false);
ScalarOpCount scalar_flop_count(const AttentionProblem& p);

}  // namespace vfa
