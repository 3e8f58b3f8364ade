#include "vfa/exp_approx.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "vfa/errors.hpp"

namespace vfa {

namespace {

double exact_scale(int bits, double clip_magnitude) {
  return (std::ldexp(1.0, bits - 1) - 1.0) / clip_magnitude;
}

}  // namespace

QuantSpec::QuantSpec() : QuantSpec(32, 256, -15.0f) {}

QuantSpec::QuantSpec(int bits_, double clip_magnitude_, float clip_threshold_)
    : bits(bits_), clip_magnitude(clip_magnitude_), clip_threshold(clip_threshold_) {
  if (bits < 2 || bits > 32) throw ConfigError("QuantSpec: bits must be in [2, 32]");
  if (!(clip_magnitude > 0)) throw ConfigError("QuantSpec: clip magnitude must be positive");
  if (!(clip_threshold < 0) || !std::isfinite(clip_threshold))
    throw ConfigError("QuantSpec: clip threshold must be finite and negative");
  const double s = exact_scale(bits, clip_magnitude);
  scale = static_cast<float>(s);
  // One rounding only: the product is formed in double from the exact scale.
  fused_scale = static_cast<float>(s * std::numbers::log2e);
  clip_value = static_cast<float>(std::exp(static_cast<double>(clip_threshold)));
  bias_addend = exponent_bias << mantissa_width;
}

const QuantSpec& default_quant_spec() {
  static const QuantSpec spec;
  return spec;
}

std::int32_t quantize(float delta, const QuantSpec& spec) {
  if (std::isnan(delta) || delta > 0.0f)
    throw NumericError("quantize: input must be a non-positive finite value");
  if (!std::isfinite(delta)) throw NumericError("quantize: non-finite input");
  const float prod = delta * spec.fused_scale;  // binary32, same as the vector path
  const double r = static_cast<double>(std::nearbyintf(prod));
  if (r < -2147483648.0 || r > 2147483647.0)
    throw NumericError("quantize: value outside signed 32-bit range (clamp to the clip "
                       "threshold first)");
  return static_cast<std::int32_t>(r);
}

float exp_approx_scalar(float x, const QuantSpec& spec) {
  if (std::isnan(x) || x > 0.0f)
    throw NumericError("exp_approx: input must be a non-positive finite value");
  if (!std::isfinite(x)) throw NumericError("exp_approx: non-finite input");
  if (x <= spec.clip_threshold) return spec.clip_value;
  return std::bit_cast<float>(quantize(x, spec) + spec.bias_addend);
}

void vexp(Engine& engine, VectorReg& vd, const VectorReg& src, std::uint32_t avl,
          const QuantSpec& spec) {
  if (vd.size() != engine.vlen() || src.size() != engine.vlen())
    throw ConfigError("vexp: register width does not match engine vlen");
  if (avl < 1 || avl > engine.vlen()) throw ConfigError("vexp: bad active vector length");
  for (std::uint32_t i = 0; i < avl; ++i) {
    const float x = src.f32(i);
    if (std::isnan(x) || x > 0.0f || !std::isfinite(x))
      throw NumericError("vexp: lane " + std::to_string(i) +
                         " must hold a non-positive finite value");
  }

  MaskReg clipped = engine.make_mask();
  engine.vmfle(clipped, src, spec.clip_threshold, avl);

  // Clamp before the conversion so deeply negative lanes cannot overflow the
  // signed 32-bit conversion. Clamped lanes are dead values: the masked
  // replacement below overwrites them, so the clamp itself is not an
  // observable (or counted) step.
  for (std::uint32_t i = 0; i < avl; ++i)
    vd.set_f32(i, std::max(src.f32(i), spec.clip_threshold));

  engine.vfmul_vs(vd, vd, spec.fused_scale, avl);
  engine.vfcvt_f2i(vd, vd, avl);
  engine.vadd_int(vd, vd, spec.bias_addend, avl);
  Engine::reinterpret_i2f(vd);

  VectorReg zero = engine.make_reg();
  engine.vfadd_masked(vd, zero, spec.clip_value, clipped, avl);
}

}  // namespace vfa
