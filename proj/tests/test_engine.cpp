#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "vfa/engine.hpp"

using namespace vfa;

namespace {

Matrix row_matrix(std::initializer_list<float> vals) {
  Matrix m(1, vals.size());
  std::size_t i = 0;
  for (float v : vals) m(0, i++) = v;
  return m;
}

VectorReg reg_of(Engine& eng, std::initializer_list<float> vals) {
  VectorReg r = eng.make_reg();
  std::uint32_t i = 0;
  for (float v : vals) r.set_f32(i++, v);
  return r;
}

constexpr std::uint32_t kPoison = 0xDEADBEEFu;

void poison_tail(VectorReg& r, std::uint32_t avl) {
  for (std::uint32_t i = avl; i < r.size(); ++i) r.set_bits(i, kPoison);
}

bool tail_untouched(const VectorReg& r, std::uint32_t avl) {
  for (std::uint32_t i = avl; i < r.size(); ++i)
    if (r.bits(i) != kPoison) return false;
  return true;
}

}  // namespace

TEST_CASE("engine config validation") {
  CHECK_NOTHROW(Engine(EngineConfig{2}));
  CHECK_NOTHROW(Engine(EngineConfig{32}));
  CHECK_THROWS_AS(Engine(EngineConfig{0}), ConfigError);
  CHECK_THROWS_AS(Engine(EngineConfig{1}), ConfigError);
  CHECK_THROWS_AS(Engine(EngineConfig{24}), ConfigError);
}

TEST_CASE("vload fills active lanes and counts elements") {
  Engine eng(EngineConfig{4});
  Matrix m = row_matrix({1.0f, 2.0f, 3.0f, 4.0f});
  VectorReg r = eng.make_reg();
  eng.vload(r, m, 0, 0, 4);
  CHECK(r.f32(0) == 1.0f);
  CHECK(r.f32(1) == 2.0f);
  CHECK(r.f32(2) == 3.0f);
  CHECK(r.f32(3) == 4.0f);
  CHECK(eng.stats().vector_load == 1);
  CHECK(eng.stats().elements_loaded == 4);

  // Shorter row with a tail: lane 3 keeps its previous bits.
  Matrix m3 = row_matrix({7.0f, 8.0f, 9.0f});
  poison_tail(r, 3);
  eng.vload(r, m3, 0, 0, 3);
  CHECK(r.f32(2) == 9.0f);
  CHECK(tail_untouched(r, 3));

  CHECK_THROWS_AS(eng.vload(r, m3, 0, 2, 3), std::out_of_range);
  CHECK_THROWS_AS(eng.vload(r, m3, 1, 0, 1), std::out_of_range);
}

TEST_CASE("vstore mirrors vload and round-trips bits") {
  Engine eng(EngineConfig{4});
  Matrix m = row_matrix({1.5f, -2.5f, 0.125f, 99.0f});
  VectorReg r = eng.make_reg();
  eng.vload(r, m, 0, 0, 4);
  Matrix dst(1, 4);
  eng.vstore(r, dst, 0, 0, 4);
  CHECK(dst == m);
  CHECK(eng.stats().vector_store == 1);
  CHECK(eng.stats().elements_stored == 4);

  // avl 1 writes exactly one element.
  Matrix one(1, 4, 7.0f);
  eng.vstore(r, one, 0, 2, 1);
  CHECK(one(0, 0) == 7.0f);
  CHECK(one(0, 2) == 1.5f);
  CHECK(one(0, 3) == 7.0f);

  CHECK_THROWS_AS(eng.vstore(r, dst, 0, 2, 3), std::out_of_range);
}

TEST_CASE("overlapping store then shifted load reflects memory") {
  // Independent check against a plain array model of the same writes.
  Engine eng(EngineConfig{4});
  Matrix mem(1, 8);
  for (int i = 0; i < 8; ++i) mem(0, i) = static_cast<float>(i);
  float model[8];
  for (int i = 0; i < 8; ++i) model[i] = static_cast<float>(i);

  VectorReg r = reg_of(eng, {10.f, 11.f, 12.f, 13.f});
  eng.vstore(r, mem, 0, 2, 4);
  for (int i = 0; i < 4; ++i) model[2 + i] = 10.f + i;

  VectorReg back = eng.make_reg();
  eng.vload(back, mem, 0, 4, 4);
  for (int i = 0; i < 4; ++i) CHECK(back.f32(i) == model[4 + i]);
}

TEST_CASE("vrgather_bcast broadcasts a lane") {
  Engine eng(EngineConfig{4});
  VectorReg src = reg_of(eng, {5.f, 6.f, 7.f, 8.f});
  VectorReg dst = eng.make_reg();
  eng.vrgather_bcast(dst, src, 2, 4);
  for (int i = 0; i < 4; ++i) CHECK(dst.f32(i) == 7.0f);
  CHECK(eng.stats().gather_broadcast == 1);

  // idx 0 on an all-equal register is a fixed point.
  VectorReg allsame = reg_of(eng, {3.f, 3.f, 3.f, 3.f});
  VectorReg out = allsame;
  eng.vrgather_bcast(out, allsame, 0, 4);
  CHECK(out == allsame);

  CHECK_THROWS_AS(eng.vrgather_bcast(dst, src, 4, 4), std::out_of_range);
}

TEST_CASE("vmacc is unfused binary32 and matches a scalar loop") {
  Engine eng(EngineConfig{8});
  VectorReg acc = eng.make_reg();
  VectorReg a = reg_of(eng, {1.f, 2.f});
  VectorReg b = reg_of(eng, {3.f, 4.f});
  eng.vmacc(acc, a, b, 2);
  CHECK(acc.f32(0) == 3.0f);
  CHECK(acc.f32(1) == 8.0f);
  CHECK(eng.stats().multiply_accumulate == 1);

  // All-zero multiplier leaves the accumulator unchanged.
  VectorReg zero = eng.make_reg();
  VectorReg before = acc;
  eng.vmacc(acc, a, zero, 2);
  CHECK(acc == before);

  // Random lanes against the scalar reference loop, bit for bit.
  std::mt19937 rng(123);
  std::uniform_real_distribution<float> dist(-4.0f, 4.0f);
  VectorReg racc = eng.make_reg(), ra = eng.make_reg(), rb = eng.make_reg();
  float ref[8];
  for (int i = 0; i < 8; ++i) {
    racc.set_f32(i, dist(rng));
    ra.set_f32(i, dist(rng));
    rb.set_f32(i, dist(rng));
    ref[i] = racc.f32(i);
  }
  for (int i = 0; i < 8; ++i) {
    float prod = ra.f32(i) * rb.f32(i);
    ref[i] += prod;
  }
  eng.vmacc(racc, ra, rb, 8);
  for (int i = 0; i < 8; ++i) CHECK(racc.f32(i) == ref[i]);
}

TEST_CASE("vredmax folds seed lane 0 with active lanes") {
  Engine eng(EngineConfig{4});
  VectorReg src = reg_of(eng, {1.f, 5.f, 3.f, 2.f});
  VectorReg seed = reg_of(eng, {4.f, 0.f, 0.f, 0.f});
  VectorReg dst = eng.make_reg();
  eng.vredmax(dst, src, seed, 4);
  CHECK(dst.f32(0) == 5.0f);
  // Remaining lanes are a deterministic copy of src.
  CHECK(dst.f32(1) == 5.0f);
  CHECK(dst.f32(3) == 2.0f);
  CHECK(eng.stats().reduction_max == 1);

  // Seed dominates when larger than every active lane.
  seed.set_f32(0, 9.0f);
  eng.vredmax(dst, src, seed, 4);
  CHECK(dst.f32(0) == 9.0f);

  src.set_f32(2, std::numeric_limits<float>::quiet_NaN());
  CHECK_THROWS_AS(eng.vredmax(dst, src, seed, 4), NumericError);
  src.set_f32(2, std::numeric_limits<float>::infinity());
  CHECK_THROWS_AS(eng.vredmax(dst, src, seed, 4), NumericError);
}

TEST_CASE("vredsum is an ascending-order fold") {
  Engine eng(EngineConfig{8});
  VectorReg src = reg_of(eng, {1.f, 2.f, 3.f, 4.f});
  VectorReg dst = eng.make_reg();
  eng.vredsum(dst, src, 4);
  CHECK(dst.f32(0) == 10.0f);
  CHECK(eng.stats().reduction_sum == 1);

  eng.vredsum(dst, src, 1);
  CHECK(dst.f32(0) == 1.0f);

  // Bit-exact match with the scalar left fold on random data.
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (int trial = 0; trial < 50; ++trial) {
    VectorReg r = eng.make_reg();
    for (int i = 0; i < 8; ++i) r.set_f32(i, dist(rng));
    float fold = r.f32(0);
    for (int i = 1; i < 8; ++i) fold += r.f32(i);
    eng.vredsum(dst, r, 8);
    CHECK(dst.f32(0) == fold);
  }
}

TEST_CASE("vmsneq compares lanes") {
  Engine eng(EngineConfig{4});
  VectorReg a = reg_of(eng, {1.f, 2.f, 3.f, 4.f});
  VectorReg b = a;
  MaskReg m = eng.make_mask();
  eng.vmsneq(m, a, b, 4);
  for (int i = 0; i < 4; ++i) CHECK_FALSE(m.get(i));
  CHECK(eng.stats().mask_set == 1);

  b.set_f32(2, 9.0f);
  eng.vmsneq(m, a, b, 4);
  CHECK_FALSE(m.get(0));
  CHECK(m.get(2));
  CHECK_FALSE(m.get(3));

  a.set_f32(1, std::numeric_limits<float>::quiet_NaN());
  CHECK_THROWS_AS(eng.vmsneq(m, a, b, 4), NumericError);
}

TEST_CASE("vmfle threshold is inclusive") {
  Engine eng(EngineConfig{4});
  VectorReg a = reg_of(eng, {-20.f, -15.f, -1.f, 0.f});
  MaskReg m = eng.make_mask();
  eng.vmfle(m, a, -15.0f, 3);
  CHECK(m.get(0));
  CHECK(m.get(1));
  CHECK_FALSE(m.get(2));

  VectorReg above = reg_of(eng, {1.f, 2.f, 3.f, 4.f});
  eng.vmfle(m, above, -15.0f, 4);
  for (int i = 0; i < 4; ++i) CHECK_FALSE(m.get(i));

  // Mixed random values against the scalar comparison.
  std::mt19937 rng(99);
  std::uniform_real_distribution<float> dist(-30.0f, 0.0f);
  VectorReg r = eng.make_reg();
  for (int i = 0; i < 4; ++i) r.set_f32(i, dist(rng));
  eng.vmfle(m, r, -15.0f, 4);
  for (int i = 0; i < 4; ++i) CHECK(m.get(i) == (r.f32(i) <= -15.0f));
}

TEST_CASE("masked multiply is mask-undisturbed") {
  Engine eng(EngineConfig{4});
  VectorReg a = reg_of(eng, {1.f, 2.f, 3.f, 4.f});
  VectorReg b = reg_of(eng, {10.f, 10.f, 10.f, 10.f});
  MaskReg all = eng.make_mask();
  all.fill(true);

  // All-true equals the plain product.
  VectorReg d1 = eng.make_reg();
  eng.vfmul_masked(d1, a, b, all, 4);
  for (int i = 0; i < 4; ++i) CHECK(d1.f32(i) == a.f32(i) * b.f32(i));
  CHECK(eng.stats().masked_multiply == 1);

  // All-false leaves the destination bit-identical.
  MaskReg none = eng.make_mask();
  VectorReg d2 = reg_of(eng, {7.f, 7.f, 7.f, 7.f});
  VectorReg before = d2;
  eng.vfmul_masked(d2, a, b, none, 4);
  CHECK(d2 == before);

  // Alternating mask interleaves product and old destination lanes.
  MaskReg alt = eng.make_mask();
  alt.set(0, true);
  alt.set(2, true);
  VectorReg d3 = reg_of(eng, {7.f, 7.f, 7.f, 7.f});
  eng.vfmul_masked(d3, a, b, alt, 4);
  for (int i = 0; i < 4; ++i) {
    const float want = alt.get(i) ? a.f32(i) * b.f32(i) : 7.0f;
    CHECK(d3.f32(i) == want);
  }
}

TEST_CASE("vfadd_masked writes the constant only into masked lanes") {
  Engine eng(EngineConfig{4});
  VectorReg zero = eng.make_reg();
  VectorReg dst = reg_of(eng, {1.f, 2.f, 3.f, 4.f});
  MaskReg m = eng.make_mask();
  m.set(1, true);
  const float c = 3.0590232e-07f;
  eng.vfadd_masked(dst, zero, c, m, 4);
  CHECK(dst.f32(0) == 1.0f);
  CHECK(dst.f32(1) == c);
  CHECK(dst.f32(2) == 3.0f);
  CHECK(eng.stats().add == 1);
}

TEST_CASE("elementwise arithmetic") {
  Engine eng(EngineConfig{4});
  VectorReg a = reg_of(eng, {2.f, 4.f, -1.f, 0.f});
  VectorReg b = reg_of(eng, {2.f, 2.f, 4.f, 1.f});
  VectorReg d = eng.make_reg();

  eng.vfdiv(d, a, b, 2);
  CHECK(d.f32(0) == 1.0f);
  CHECK(d.f32(1) == 2.0f);
  CHECK(eng.stats().divide == 1);
  VectorReg zden = eng.make_reg();
  CHECK_THROWS_AS(eng.vfdiv(d, a, zden, 4), NumericError);

  eng.vfadd(d, a, b, 4);
  CHECK(d.f32(2) == 3.0f);
  eng.vfsub(d, a, b, 4);
  CHECK(d.f32(1) == 2.0f);
  CHECK(eng.stats().add == 2);

  eng.vfmul_vs(d, a, 0.5f, 4);
  CHECK(d.f32(1) == 2.0f);
  CHECK(eng.stats().multiply_vs == 1);

  // vfmv is a bit-exact copy, including negative zero.
  VectorReg nz = eng.make_reg();
  nz.set_f32(0, -0.0f);
  eng.vfmv(d, nz, 4);
  CHECK(d.bits(0) == 0x80000000u);
  CHECK(eng.stats().move == 1);
}

TEST_CASE("vfcvt_f2i rounds to nearest even") {
  Engine eng(EngineConfig{4});
  VectorReg a = reg_of(eng, {2.5f, -8388608.0f, 3.5f, -0.5f});
  VectorReg d = eng.make_reg();
  eng.vfcvt_f2i(d, a, 4);
  CHECK(d.i32(0) == 2);
  CHECK(d.i32(1) == -8388608);
  CHECK(d.i32(2) == 4);
  CHECK(d.i32(3) == 0);
  CHECK(eng.stats().convert_f2i == 1);

  // Dense random sweep against the reference rounding.
  std::mt19937 rng(2024);
  std::uniform_real_distribution<float> dist(-1e6f, 1e6f);
  VectorReg r = eng.make_reg();
  for (int trial = 0; trial < 200; ++trial) {
    for (int i = 0; i < 4; ++i) r.set_f32(i, dist(rng));
    eng.vfcvt_f2i(d, r, 4);
    for (int i = 0; i < 4; ++i)
      CHECK(d.i32(i) == static_cast<std::int32_t>(std::nearbyint(static_cast<double>(r.f32(i)))));
  }

  VectorReg big = reg_of(eng, {3e9f, 0.f, 0.f, 0.f});
  CHECK_THROWS_AS(eng.vfcvt_f2i(d, big, 4), NumericError);
}

TEST_CASE("vadd_int is a two's-complement add with overflow checks") {
  Engine eng(EngineConfig{4});
  VectorReg a = eng.make_reg();
  a.set_i32(0, -8388608);
  VectorReg d = eng.make_reg();
  eng.vadd_int(d, a, 1065353216, 1);
  CHECK(d.i32(0) == 1056964608);
  Engine::reinterpret_i2f(d);
  CHECK(d.f32(0) == 0.5f);  // bias restoration lands on the 0.5 bit pattern
  CHECK(eng.stats().add_int == 1);

  eng.vadd_int(d, a, 0, 1);
  CHECK(d.i32(0) == -8388608);

  VectorReg nearmax = eng.make_reg();
  nearmax.set_i32(0, INT32_MAX);
  CHECK_THROWS_AS(eng.vadd_int(d, nearmax, 1, 1), NumericError);
}

TEST_CASE("reinterpret_i2f is the IEEE-754 identity") {
  Engine eng(EngineConfig{4});
  VectorReg r = eng.make_reg();
  r.set_bits(0, 0x3F800000u);
  r.set_bits(1, 0x00000000u);
  r.set_i32(2, 1056964608);
  const ExecStats before = eng.stats();
  Engine::reinterpret_i2f(r);
  CHECK(r.f32(0) == 1.0f);
  CHECK(r.f32(1) == 0.0f);
  CHECK(r.f32(2) == 0.5f);
  CHECK(eng.stats().total_instructions() == before.total_instructions());
}

TEST_CASE("property: no operation touches lanes at or beyond avl") {
  Engine eng(EngineConfig{8});
  std::mt19937 rng(5150);
  std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
  Matrix mem(2, 8);
  for (std::size_t c = 0; c < 8; ++c) mem(0, c) = dist(rng);

  auto fresh = [&] {
    VectorReg r = eng.make_reg();
    for (int i = 0; i < 8; ++i) r.set_f32(i, dist(rng));
    return r;
  };

  for (std::uint32_t avl = 1; avl <= 7; ++avl) {
    VectorReg a = fresh(), b = fresh(), dst = fresh();
    MaskReg mask = eng.make_mask();
    for (int i = 0; i < 8; ++i) mask.set(i, (i % 2) == 0);

    poison_tail(dst, avl);
    eng.vload(dst, mem, 0, 0, avl);
    CHECK(tail_untouched(dst, avl));

    poison_tail(dst, avl);
    eng.vrgather_bcast(dst, a, 0, avl);
    CHECK(tail_untouched(dst, avl));

    poison_tail(dst, avl);
    eng.vmacc(dst, a, b, avl);
    CHECK(tail_untouched(dst, avl));

    poison_tail(dst, avl);
    eng.vfadd(dst, a, b, avl);
    CHECK(tail_untouched(dst, avl));

    poison_tail(dst, avl);
    eng.vfsub(dst, a, b, avl);
    CHECK(tail_untouched(dst, avl));

    poison_tail(dst, avl);
    eng.vfmul_vs(dst, a, 1.5f, avl);
    CHECK(tail_untouched(dst, avl));

    poison_tail(dst, avl);
    eng.vfmv(dst, a, avl);
    CHECK(tail_untouched(dst, avl));

    poison_tail(dst, avl);
    eng.vfmul_masked(dst, a, b, mask, avl);
    CHECK(tail_untouched(dst, avl));

    poison_tail(dst, avl);
    eng.vfadd_masked(dst, a, 2.0f, mask, avl);
    CHECK(tail_untouched(dst, avl));

    poison_tail(dst, avl);
    eng.vfcvt_f2i(dst, a, avl);
    CHECK(tail_untouched(dst, avl));

    poison_tail(dst, avl);
    eng.vadd_int(dst, a, 3, avl);
    CHECK(tail_untouched(dst, avl));

    // Reductions must ignore poisoned inactive source lanes entirely.
    VectorReg src = fresh(), seed = fresh();
    seed.set_f32(0, -1.0f);
    VectorReg srcp = src;
    for (std::uint32_t i = avl; i < 8; ++i)
      srcp.set_f32(i, std::numeric_limits<float>::quiet_NaN());
    VectorReg out1 = eng.make_reg(), out2 = eng.make_reg();
    eng.vredsum(out1, src, avl);
    eng.vredsum(out2, srcp, avl);
    CHECK(out1.f32(0) == out2.f32(0));
    eng.vredmax(out1, src, seed, avl);
    eng.vredmax(out2, srcp, seed, avl);
    CHECK(out1.f32(0) == out2.f32(0));
  }
}

TEST_CASE("property: masked ops with all-true mask equal unmasked forms") {
  Engine eng(EngineConfig{8});
  std::mt19937 rng(31337);
  std::uniform_real_distribution<float> dist(-3.0f, 3.0f);
  MaskReg all = eng.make_mask();
  all.fill(true);
  for (int trial = 0; trial < 20; ++trial) {
    VectorReg a = eng.make_reg(), b = eng.make_reg();
    for (int i = 0; i < 8; ++i) {
      a.set_f32(i, dist(rng));
      b.set_f32(i, dist(rng));
    }
    VectorReg masked = eng.make_reg(), plain = eng.make_reg();
    eng.vfmul_masked(masked, a, b, all, 8);
    for (int i = 0; i < 8; ++i) plain.set_f32(i, a.f32(i) * b.f32(i));
    CHECK(masked == plain);
  }
}

TEST_CASE("counter conservation: totals equal the sum over classes") {
  Engine eng(EngineConfig{4});
  Matrix m = row_matrix({1.f, 2.f, 3.f, 4.f});
  VectorReg a = eng.make_reg(), b = eng.make_reg(), d = eng.make_reg();
  MaskReg mask = eng.make_mask();
  eng.vload(a, m, 0, 0, 4);
  eng.vload(b, m, 0, 0, 2);
  eng.vmacc(d, a, b, 4);
  eng.vredsum(d, a, 4);
  eng.vredmax(d, a, b, 4);
  eng.vmsneq(mask, a, b, 4);
  eng.vfadd(d, a, b, 4);
  eng.vfmv(d, a, 4);
  eng.vexp_map(d, b, 2);

  const ExecStats& s = eng.stats();
  CHECK(s.total_instructions() == 9);
  CHECK(s.elements_loaded == 6);
  std::uint64_t by_stream = 0;
  for (auto v : s.loads_by_stream) by_stream += v;
  CHECK(by_stream == s.vector_load);
}

TEST_CASE("active length bounds are enforced") {
  Engine eng(EngineConfig{4});
  VectorReg a = eng.make_reg(), d = eng.make_reg();
  CHECK_THROWS_AS(eng.vfadd(d, a, a, 0), ConfigError);
  CHECK_THROWS_AS(eng.vfadd(d, a, a, 5), ConfigError);
  // Registers from a different engine width are rejected.
  Engine other(EngineConfig{8});
  VectorReg wide = other.make_reg();
  CHECK_THROWS_AS(eng.vfadd(d, wide, a, 2), ConfigError);
}
