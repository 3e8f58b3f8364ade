#pragma once

#include <cstdint>

#include "vfa/engine.hpp"

namespace vfa {

/// Fixed-point layout and constants for the low-cost exponential of
/// non-positive score differences. With the defaults (32 bits, clip
/// magnitude 256) the fixed point has a 9-bit integer part and a 23-bit
/// fractional part, so the scaled value lines up with the binary32 mantissa.
struct QuantSpec {
  int bits = 32;                 // total fixed-point width
  double clip_magnitude = 256;   // largest representable absolute value
  float clip_threshold = -15.0f; // inputs at or below this return clip_value
  std::int32_t exponent_bias = 127;  // binary32 exponent bias B
  int mantissa_width = 23;           // binary32 mantissa width W_M

  // Derived once at construction:
  float scale = 0.0f;        // (2^(bits-1) - 1) / clip_magnitude, rounded to binary32
  float fused_scale = 0.0f;  // binary32 of the exact scale times log2(e)
  float clip_value = 0.0f;   // binary32 nearest e^clip_threshold
  std::int32_t bias_addend = 0;  // exponent_bias << mantissa_width

  QuantSpec();
  QuantSpec(int bits, double clip_magnitude, float clip_threshold);
};

const QuantSpec& default_quant_spec();

/// Scaling quantization of a score difference delta <= 0: round-to-nearest-even
/// of fused_scale * delta in binary32. The log2(e) factor is folded into the
/// scale so the later bit trick produces 2^(scale*delta*log2 e) = e^delta.
std::int32_t quantize(float delta, const QuantSpec& spec = default_quant_spec());

/// Approximate e^x for x <= 0. Inputs at or below clip_threshold return the
/// clip constant; otherwise the quantized value plus the scaled exponent bias
/// is reinterpreted as a binary32, which realizes 2^I * (1 + F) — the chord
/// approximation of 2^(I+F). Always positive, monotone on the clip domain.
float exp_approx_scalar(float x, const QuantSpec& spec = default_quant_spec());

/// Vector form, lane-for-lane bit-identical to exp_approx_scalar. Executes the
/// five counted steps: clip mask, scalar multiply by the fused scale, integer
/// conversion, integer bias addition, masked replacement of clipped lanes.
/// Lanes are clamped to clip_threshold before the conversion so the integer
/// conversion cannot overflow; clamped lanes are overwritten by the masked
/// replacement, so the clamp is not observable in the result.
void vexp(Engine& engine, VectorReg& vd, const VectorReg& src, std::uint32_t avl,
          const QuantSpec& spec = default_quant_spec());

}  // namespace vfa
