#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <vector>

#include "vfa/errors.hpp"
#include "vfa/matrix.hpp"

namespace vfa {

struct EngineConfig {
  // Number of 32-bit lanes per vector register. Must be a power of two >= 2.
  // The default mirrors a 1024-bit engine with 32 lanes of 32-bit elements.
  std::uint32_t vlen = 32;
};

// Which operand stream a memory instruction belongs to. The class counters
// are the primary model; this breakdown exists so the harness can attribute
// loads to K/V reuse and output spills.
enum class Stream : std::uint8_t { q = 0, k = 1, v = 2, out = 3, other = 4 };
inline constexpr std::size_t kStreamCount = 5;

/// Per-instruction-class counters. Every engine operation increments exactly
/// one class counter; reinterpreting a register between its float and integer
/// views is free (same physical register file).
struct ExecStats {
  std::uint64_t vector_load = 0;
  std::uint64_t vector_store = 0;
  std::uint64_t gather_broadcast = 0;
  std::uint64_t multiply_accumulate = 0;
  std::uint64_t reduction_max = 0;
  std::uint64_t reduction_sum = 0;
  std::uint64_t mask_set = 0;
  std::uint64_t masked_multiply = 0;
  std::uint64_t add = 0;  // vfadd, vfsub and the masked scalar-add replacement
  std::uint64_t multiply_vs = 0;
  std::uint64_t divide = 0;
  std::uint64_t move = 0;
  std::uint64_t convert_f2i = 0;
  std::uint64_t add_int = 0;
  // Oracle-mode exponential: one lane-wise libm exp counted as a single
  // vector instruction. Stays zero when the bit-trick exponential is used.
  std::uint64_t exp_map = 0;

  std::uint64_t elements_loaded = 0;
  std::uint64_t elements_stored = 0;

  std::array<std::uint64_t, kStreamCount> loads_by_stream{};
  std::array<std::uint64_t, kStreamCount> stores_by_stream{};

  std::uint64_t total_instructions() const noexcept {
    return vector_load + vector_store + gather_broadcast + multiply_accumulate +
           reduction_max + reduction_sum + mask_set + masked_multiply + add +
           multiply_vs + divide + move + convert_f2i + add_int + exp_map;
  }

  ExecStats operator-(const ExecStats& o) const noexcept;
};

/// One vector register: vlen 32-bit cells, each readable as a binary32 float
/// or as a signed 32-bit integer (bit-pattern reinterpretation, no conversion).
class VectorReg {
 public:
  VectorReg() = default;
  explicit VectorReg(std::uint32_t vlen) : lanes_(vlen, 0u) {}

  std::uint32_t size() const noexcept { return static_cast<std::uint32_t>(lanes_.size()); }

  float f32(std::uint32_t i) const { return std::bit_cast<float>(lanes_[i]); }
  void set_f32(std::uint32_t i, float v) { lanes_[i] = std::bit_cast<std::uint32_t>(v); }
  std::int32_t i32(std::uint32_t i) const { return std::bit_cast<std::int32_t>(lanes_[i]); }
  void set_i32(std::uint32_t i, std::int32_t v) { lanes_[i] = std::bit_cast<std::uint32_t>(v); }
  std::uint32_t bits(std::uint32_t i) const { return lanes_[i]; }
  void set_bits(std::uint32_t i, std::uint32_t v) { lanes_[i] = v; }

  // Register (re)initialization is construction, not a counted instruction.
  void fill_zero() { lanes_.assign(lanes_.size(), 0u); }
  void fill_f32(float v) { lanes_.assign(lanes_.size(), std::bit_cast<std::uint32_t>(v)); }

  bool operator==(const VectorReg&) const = default;

 private:
  std::vector<std::uint32_t> lanes_;
};

/// Per-lane boolean mask.
class MaskReg {
 public:
  MaskReg() = default;
  explicit MaskReg(std::uint32_t vlen) : bits_(vlen, 0) {}

  std::uint32_t size() const noexcept { return static_cast<std::uint32_t>(bits_.size()); }
  bool get(std::uint32_t i) const { return bits_[i] != 0; }
  void set(std::uint32_t i, bool v) { bits_[i] = v ? 1 : 0; }
  void fill(bool v) { bits_.assign(bits_.size(), v ? 1 : 0); }

  bool operator==(const MaskReg&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Deterministic, countable execution model of the vector instruction subset
/// the kernels use. Unit-stride memory only. All operations take an active
/// vector length `avl` (1 <= avl <= vlen): lanes >= avl are never read by
/// reductions and never written, and masked forms are mask-undisturbed
/// (unselected destination lanes keep their previous value).
///
/// Arithmetic is strict binary32. Multiply-accumulate rounds after the
/// multiply and after the add (no fma), and reductions fold in ascending lane
/// order, so results are bit-reproducible.
class Engine {
 public:
  explicit Engine(EngineConfig cfg = {});

  std::uint32_t vlen() const noexcept { return cfg_.vlen; }
  const ExecStats& stats() const noexcept { return stats_; }
  void reset_stats() noexcept { stats_ = ExecStats{}; }

  VectorReg make_reg() const { return VectorReg(cfg_.vlen); }
  MaskReg make_mask() const { return MaskReg(cfg_.vlen); }
  // Uncounted register initialization (zeroing an accumulator, state splat).
  void splat(VectorReg& vd, float v) const;

  // --- memory ---
  void vload(VectorReg& vd, const Matrix& mem, std::size_t row, std::size_t col_start,
             std::uint32_t avl, Stream stream = Stream::other);
  void vstore(const VectorReg& vs, Matrix& mem, std::size_t row, std::size_t col_start,
              std::uint32_t avl, Stream stream = Stream::other);

  // --- permutation ---
  // Broadcast src lane `idx` (idx < vlen) into the active lanes of vd.
  void vrgather_bcast(VectorReg& vd, const VectorReg& src, std::uint32_t idx, std::uint32_t avl);

  // --- arithmetic ---
  // acc[i] += a[i] * b[i], unfused binary32.
  void vmacc(VectorReg& acc, const VectorReg& a, const VectorReg& b, std::uint32_t avl);
  void vfadd(VectorReg& vd, const VectorReg& a, const VectorReg& b, std::uint32_t avl);
  void vfsub(VectorReg& vd, const VectorReg& a, const VectorReg& b, std::uint32_t avl);
  void vfdiv(VectorReg& vd, const VectorReg& a, const VectorReg& b, std::uint32_t avl);
  void vfmul_vs(VectorReg& vd, const VectorReg& a, float scalar, std::uint32_t avl);
  void vfmv(VectorReg& vd, const VectorReg& src, std::uint32_t avl);  // bit-exact copy

  // --- reductions (ascending lane order; result in lane 0, lanes 1..avl-1
  // --- hold a copy of src so the contents stay deterministic) ---
  // lane0 = max(seed.lane0, max of active src lanes); src and seed must be finite.
  void vredmax(VectorReg& vd, const VectorReg& src, const VectorReg& seed, std::uint32_t avl);
  // lane0 = sum of active src lanes, no seed accumulator.
  void vredsum(VectorReg& vd, const VectorReg& src, std::uint32_t avl);

  // --- masks ---
  void vmsneq(MaskReg& md, const VectorReg& a, const VectorReg& b, std::uint32_t avl);
  void vmfle(MaskReg& md, const VectorReg& a, float threshold, std::uint32_t avl);

  // --- masked forms (mask-undisturbed) ---
  void vfmul_masked(VectorReg& vd, const VectorReg& a, const VectorReg& b, const MaskReg& mask,
                    std::uint32_t avl);
  // vd[i] = a[i] + scalar where mask is set.
  void vfadd_masked(VectorReg& vd, const VectorReg& a, float scalar, const MaskReg& mask,
                    std::uint32_t avl);

  // --- integer view ---
  // Round-to-nearest-even float -> signed 32-bit, stored as the integer lane view.
  void vfcvt_f2i(VectorReg& vd, const VectorReg& a, std::uint32_t avl);
  // Two's-complement lane + scalar; overflow past the signed range is an error.
  void vadd_int(VectorReg& vd, const VectorReg& a, std::int32_t scalar, std::uint32_t avl);

  // Zero-cost type pun between the integer and float lane views. The register
  // already holds raw bits, so this is a no-op kept for call-site clarity.
  static void reinterpret_i2f(VectorReg&) noexcept {}

  // Oracle-mode exponential: vd[i] = (float)exp((double)a[i]) on active lanes,
  // counted as one exp_map instruction. Not part of the modeled ISA.
  void vexp_map(VectorReg& vd, const VectorReg& a, std::uint32_t avl);

 private:
  void check_avl(std::uint32_t avl) const;
  void check_reg(const VectorReg& r) const;
  void check_mask(const MaskReg& m) const;

  EngineConfig cfg_;
  ExecStats stats_;
};

}  // namespace vfa
