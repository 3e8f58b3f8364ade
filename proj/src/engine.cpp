#include "vfa/engine.hpp"

#include <cmath>
#include <string>

namespace vfa {

namespace {

bool is_pow2(std::uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace

ExecStats ExecStats::operator-(const ExecStats& o) const noexcept {
  ExecStats r = *this;
  r.vector_load -= o.vector_load;
  r.vector_store -= o.vector_store;
  r.gather_broadcast -= o.gather_broadcast;
  r.multiply_accumulate -= o.multiply_accumulate;
  r.reduction_max -= o.reduction_max;
  r.reduction_sum -= o.reduction_sum;
  r.mask_set -= o.mask_set;
  r.masked_multiply -= o.masked_multiply;
  r.add -= o.add;
  r.multiply_vs -= o.multiply_vs;
  r.divide -= o.divide;
  r.move -= o.move;
  r.convert_f2i -= o.convert_f2i;
  r.add_int -= o.add_int;
  r.exp_map -= o.exp_map;
  r.elements_loaded -= o.elements_loaded;
  r.elements_stored -= o.elements_stored;
  for (std::size_t i = 0; i < kStreamCount; ++i) {
    r.loads_by_stream[i] -= o.loads_by_stream[i];
    r.stores_by_stream[i] -= o.stores_by_stream[i];
  }
  return r;
}

Engine::Engine(EngineConfig cfg) : cfg_(cfg) {
  if (cfg_.vlen < 2 || !is_pow2(cfg_.vlen))
    throw ConfigError("vlen must be a power of two >= 2, got " + std::to_string(cfg_.vlen));
}

void Engine::check_avl(std::uint32_t avl) const {
  if (avl < 1 || avl > cfg_.vlen)
    throw ConfigError("active vector length " + std::to_string(avl) + " outside [1, " +
                      std::to_string(cfg_.vlen) + "]");
}

void Engine::check_reg(const VectorReg& r) const {
  if (r.size() != cfg_.vlen) throw ConfigError("vector register width does not match engine vlen");
}

void Engine::check_mask(const MaskReg& m) const {
  if (m.size() != cfg_.vlen) throw ConfigError("mask register width does not match engine vlen");
}

void Engine::splat(VectorReg& vd, float v) const {
  check_reg(vd);
  vd.fill_f32(v);
}

void Engine::vload(VectorReg& vd, const Matrix& mem, std::size_t row, std::size_t col_start,
                   std::uint32_t avl, Stream stream) {
  check_avl(avl);
  check_reg(vd);
  if (row >= mem.rows() || col_start + avl > mem.cols())
    throw std::out_of_range("vload: run of " + std::to_string(avl) + " elements at (" +
                            std::to_string(row) + ", " + std::to_string(col_start) +
                            ") exceeds a " + std::to_string(mem.rows()) + "x" +
                            std::to_string(mem.cols()) + " matrix");
  const float* src = mem.data() + row * mem.cols() + col_start;
  for (std::uint32_t i = 0; i < avl; ++i) vd.set_f32(i, src[i]);
  stats_.vector_load += 1;
  stats_.elements_loaded += avl;
  stats_.loads_by_stream[static_cast<std::size_t>(stream)] += 1;
}

void Engine::vstore(const VectorReg& vs, Matrix& mem, std::size_t row, std::size_t col_start,
                    std::uint32_t avl, Stream stream) {
  check_avl(avl);
  check_reg(vs);
  if (row >= mem.rows() || col_start + avl > mem.cols())
    throw std::out_of_range("vstore: run of " + std::to_string(avl) + " elements at (" +
                            std::to_string(row) + ", " + std::to_string(col_start) +
                            ") exceeds a " + std::to_string(mem.rows()) + "x" +
                            std::to_string(mem.cols()) + " matrix");
  float* dst = mem.data() + row * mem.cols() + col_start;
  for (std::uint32_t i = 0; i < avl; ++i) dst[i] = vs.f32(i);
  stats_.vector_store += 1;
  stats_.elements_stored += avl;
  stats_.stores_by_stream[static_cast<std::size_t>(stream)] += 1;
}

void Engine::vrgather_bcast(VectorReg& vd, const VectorReg& src, std::uint32_t idx,
                            std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(src);
  if (idx >= cfg_.vlen)
    throw std::out_of_range("vrgather: index " + std::to_string(idx) + " >= vlen " +
                            std::to_string(cfg_.vlen));
  const std::uint32_t v = src.bits(idx);
  for (std::uint32_t i = 0; i < avl; ++i) vd.set_bits(i, v);
  stats_.gather_broadcast += 1;
}

void Engine::vmacc(VectorReg& acc, const VectorReg& a, const VectorReg& b, std::uint32_t avl) {
  check_avl(avl);
  check_reg(acc);
  check_reg(a);
  check_reg(b);
  for (std::uint32_t i = 0; i < avl; ++i) {
    const float prod = a.f32(i) * b.f32(i);  // rounded, then added: unfused
    acc.set_f32(i, acc.f32(i) + prod);
  }
  stats_.multiply_accumulate += 1;
}

void Engine::vfadd(VectorReg& vd, const VectorReg& a, const VectorReg& b, std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(a);
  check_reg(b);
  for (std::uint32_t i = 0; i < avl; ++i) vd.set_f32(i, a.f32(i) + b.f32(i));
  stats_.add += 1;
}

void Engine::vfsub(VectorReg& vd, const VectorReg& a, const VectorReg& b, std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(a);
  check_reg(b);
  for (std::uint32_t i = 0; i < avl; ++i) vd.set_f32(i, a.f32(i) - b.f32(i));
  stats_.add += 1;  // subtract shares the floating add class
}

void Engine::vfdiv(VectorReg& vd, const VectorReg& a, const VectorReg& b, std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(a);
  check_reg(b);
  for (std::uint32_t i = 0; i < avl; ++i)
    if (b.f32(i) == 0.0f) throw NumericError("vfdiv: zero divisor in lane " + std::to_string(i));
  for (std::uint32_t i = 0; i < avl; ++i) vd.set_f32(i, a.f32(i) / b.f32(i));
  stats_.divide += 1;
}

void Engine::vfmul_vs(VectorReg& vd, const VectorReg& a, float scalar, std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(a);
  for (std::uint32_t i = 0; i < avl; ++i) vd.set_f32(i, a.f32(i) * scalar);
  stats_.multiply_vs += 1;
}

void Engine::vfmv(VectorReg& vd, const VectorReg& src, std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(src);
  for (std::uint32_t i = 0; i < avl; ++i) vd.set_bits(i, src.bits(i));
  stats_.move += 1;
}

void Engine::vredmax(VectorReg& vd, const VectorReg& src, const VectorReg& seed,
                     std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(src);
  check_reg(seed);
  if (!std::isfinite(seed.f32(0))) throw NumericError("vredmax: non-finite seed");
  for (std::uint32_t i = 0; i < avl; ++i)
    if (!std::isfinite(src.f32(i)))
      throw NumericError("vredmax: non-finite value in lane " + std::to_string(i));
  float m = seed.f32(0);
  for (std::uint32_t i = 0; i < avl; ++i) m = std::max(m, src.f32(i));
  for (std::uint32_t i = 1; i < avl; ++i) vd.set_bits(i, src.bits(i));
  vd.set_f32(0, m);
  stats_.reduction_max += 1;
}

void Engine::vredsum(VectorReg& vd, const VectorReg& src, std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(src);
  float s = src.f32(0);
  for (std::uint32_t i = 1; i < avl; ++i) s += src.f32(i);
  for (std::uint32_t i = 1; i < avl; ++i) vd.set_bits(i, src.bits(i));
  vd.set_f32(0, s);
  stats_.reduction_sum += 1;
}

void Engine::vmsneq(MaskReg& md, const VectorReg& a, const VectorReg& b, std::uint32_t avl) {
  check_avl(avl);
  check_mask(md);
  check_reg(a);
  check_reg(b);
  for (std::uint32_t i = 0; i < avl; ++i)
    if (std::isnan(a.f32(i)) || std::isnan(b.f32(i)))
      throw NumericError("vmsneq: NaN in lane " + std::to_string(i));
  for (std::uint32_t i = 0; i < avl; ++i) md.set(i, a.f32(i) != b.f32(i));
  stats_.mask_set += 1;
}

void Engine::vmfle(MaskReg& md, const VectorReg& a, float threshold, std::uint32_t avl) {
  check_avl(avl);
  check_mask(md);
  check_reg(a);
  if (std::isnan(threshold)) throw NumericError("vmfle: NaN threshold");
  for (std::uint32_t i = 0; i < avl; ++i)
    if (std::isnan(a.f32(i))) throw NumericError("vmfle: NaN in lane " + std::to_string(i));
  for (std::uint32_t i = 0; i < avl; ++i) md.set(i, a.f32(i) <= threshold);
  stats_.mask_set += 1;
}

void Engine::vfmul_masked(VectorReg& vd, const VectorReg& a, const VectorReg& b,
                          const MaskReg& mask, std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(a);
  check_reg(b);
  check_mask(mask);
  for (std::uint32_t i = 0; i < avl; ++i)
    if (mask.get(i)) vd.set_f32(i, a.f32(i) * b.f32(i));
  stats_.masked_multiply += 1;
}

void Engine::vfadd_masked(VectorReg& vd, const VectorReg& a, float scalar, const MaskReg& mask,
                          std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(a);
  check_mask(mask);
  for (std::uint32_t i = 0; i < avl; ++i)
    if (mask.get(i)) vd.set_f32(i, a.f32(i) + scalar);
  stats_.add += 1;
}

void Engine::vfcvt_f2i(VectorReg& vd, const VectorReg& a, std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(a);
  for (std::uint32_t i = 0; i < avl; ++i) {
    const float x = a.f32(i);
    if (!std::isfinite(x))
      throw NumericError("vfcvt: non-finite value in lane " + std::to_string(i));
    const double r = static_cast<double>(std::nearbyintf(x));  // ties to even
    if (r < -2147483648.0 || r > 2147483647.0)
      throw NumericError("vfcvt: value outside signed 32-bit range in lane " + std::to_string(i));
    vd.set_i32(i, static_cast<std::int32_t>(r));
  }
  stats_.convert_f2i += 1;
}

void Engine::vadd_int(VectorReg& vd, const VectorReg& a, std::int32_t scalar, std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(a);
  for (std::uint32_t i = 0; i < avl; ++i) {
    const std::int64_t sum = static_cast<std::int64_t>(a.i32(i)) + scalar;
    if (sum < INT32_MIN || sum > INT32_MAX)
      throw NumericError("vadd_int: signed overflow in lane " + std::to_string(i));
    vd.set_i32(i, static_cast<std::int32_t>(sum));
  }
  stats_.add_int += 1;
}

void Engine::vexp_map(VectorReg& vd, const VectorReg& a, std::uint32_t avl) {
  check_avl(avl);
  check_reg(vd);
  check_reg(a);
  for (std::uint32_t i = 0; i < avl; ++i)
    if (std::isnan(a.f32(i))) throw NumericError("vexp_map: NaN in lane " + std::to_string(i));
  for (std::uint32_t i = 0; i < avl; ++i)
    vd.set_f32(i, static_cast<float>(std::exp(static_cast<double>(a.f32(i)))));
  stats_.exp_map += 1;
}

}  // namespace vfa
