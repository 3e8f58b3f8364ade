#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vfa/matrix.hpp"

namespace vfa {

// Matrix file format: magic "VFA1", then row count and column count as
// unsigned 32-bit little-endian, then rows*cols binary32 values in row-major
// order, little-endian. Total length is 12 + 4*rows*cols bytes.
inline constexpr char kMatrixMagic[4] = {'V', 'F', 'A', '1'};

std::vector<std::uint8_t> matrix_to_bytes(const Matrix& m);
Matrix matrix_from_bytes(std::span<const std::uint8_t> bytes);
void write_matrix_file(const Matrix& m, const std::string& path);
Matrix read_matrix_file(const std::string& path);

/// SplitMix64: the fixed, seedable generator behind `gen`, chosen for its
/// public reference implementation so fixtures are reproducible in any
/// language. next_uniform() keeps the top 24 bits v of the output word and
/// returns v * 2^-23 - 1, an exactly representable binary32 in [-1, 1).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  float next_uniform();

 private:
  std::uint64_t state_;
};

/// Deterministic rows x cols matrix of uniform [-1, 1) values for the seed.
Matrix gen_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// FNV-1a 64-bit checksum, used to pin generated-file regression fixtures.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

}  // namespace vfa
