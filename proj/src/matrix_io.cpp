#include "vfa/matrix_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "vfa/errors.hpp"

namespace vfa {

namespace {

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32le(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> matrix_to_bytes(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0)
    throw ConfigError("matrix file: dimensions must be >= 1");
  std::vector<std::uint8_t> out;
  out.reserve(12 + 4 * m.size());
  for (char c : kMatrixMagic) out.push_back(static_cast<std::uint8_t>(c));
  put_u32le(out, static_cast<std::uint32_t>(m.rows()));
  put_u32le(out, static_cast<std::uint32_t>(m.cols()));
  for (std::size_t i = 0; i < m.size(); ++i)
    put_u32le(out, std::bit_cast<std::uint32_t>(m.data()[i]));
  return out;
}

Matrix matrix_from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw ConfigError("matrix file: truncated header");
  if (std::memcmp(bytes.data(), kMatrixMagic, 4) != 0)
    throw ConfigError("matrix file: bad magic (expected VFA1)");
  const std::uint32_t rows = get_u32le(bytes, 4);
  const std::uint32_t cols = get_u32le(bytes, 8);
  if (rows == 0 || cols == 0) throw ConfigError("matrix file: zero dimension");
  const std::size_t expect = 12 + 4 * static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != expect)
    throw ConfigError("matrix file: payload is " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(expect));
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = std::bit_cast<float>(get_u32le(bytes, 12 + 4 * i));
  return m;
}

void write_matrix_file(const Matrix& m, const std::string& path) {
  const auto bytes = matrix_to_bytes(m);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ConfigError("short write to " + path);
}

Matrix read_matrix_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw ConfigError("cannot open " + path);
  const std::streamsize size = f.tellg();
  f.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  f.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!f) throw ConfigError("short read from " + path);
  return matrix_from_bytes(bytes);
}

std::uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

float SplitMix64::next_uniform() {
  const auto v = static_cast<std::uint32_t>(next() >> 40);  // top 24 bits
  return static_cast<float>(v) * 0x1p-23f - 1.0f;           // exact in binary32
}

Matrix gen_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw ConfigError("gen: dimensions must be >= 1");
  SplitMix64 rng(seed);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.next_uniform();
  return m;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace vfa
