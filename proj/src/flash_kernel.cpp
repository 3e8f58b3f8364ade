#include "vfa/flash_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vfa {

namespace {

// Running-max sentinel for the first key block. Large-negative but finite so
// the max-difference operands stay finite; the clip inside the exponential
// turns the first-iteration rescaling into e^clip * 0 = 0.
constexpr float kMaxSentinel = -3.0e38f;

// Named registers a kernel body keeps live at once, masks included. The
// architectural register file caps resident output chunks at 32 - this.
constexpr std::uint32_t kKernelBaseRegs = 17;
constexpr std::uint32_t kRegisterFileSize = 32;

struct KernelCtx {
  const AttentionProblem& p;
  const KernelConfig& cfg;
  Engine& eng;
  std::uint32_t vlen;
  std::uint32_t chunks;    // ceil(d / vlen)
  std::uint32_t br;        // effective query-row block size
  bool resident;           // output chunks stay in registers across key blocks
  float inv_sqrt_d = 1.0f;
};

void apply_exp(KernelCtx& ctx, VectorReg& vd, const VectorReg& src, std::uint32_t avl) {
  if (ctx.cfg.exp_mode == ExpMode::approx)
    vexp(ctx.eng, vd, src, avl);
  else
    ctx.eng.vexp_map(vd, src, avl);
}

KernelRun run_kernel(const AttentionProblem& p, const KernelConfig& cfg, Engine& eng,
                     bool multiquery) {
  p.validate();
  if (cfg.vlen != eng.vlen())
    throw ConfigError("kernel config vlen " + std::to_string(cfg.vlen) +
                      " does not match engine vlen " + std::to_string(eng.vlen()));
  if (cfg.unroll < 1) throw ConfigError("unroll must be >= 1");
  const std::size_t n = p.seq_len();
  const std::size_t d = p.head_dim();
  const std::uint32_t vlen = cfg.vlen;

  KernelCtx ctx{p, cfg, eng, vlen,
                static_cast<std::uint32_t>((d + vlen - 1) / vlen),
                multiquery ? cfg.br : 1u, false};
  if (multiquery && (cfg.br < 1 || cfg.br > n))
    throw ConfigError("br must lie in [1, N]");
  ctx.resident = (ctx.br == 1) && (cfg.unroll >= ctx.chunks);
  if (ctx.resident && kKernelBaseRegs + ctx.chunks > kRegisterFileSize)
    throw ConfigError("register budget exceeded: unrolling " + std::to_string(ctx.chunks) +
                      " output chunks needs " + std::to_string(kKernelBaseRegs + ctx.chunks) +
                      " live vector registers (file holds " +
                      std::to_string(kRegisterFileSize) + ")");
  if (cfg.scale_scores)
    ctx.inv_sqrt_d = static_cast<float>(1.0 / std::sqrt(static_cast<double>(d)));

  const ExecStats before = eng.stats();

  KernelRun run;
  run.output = Matrix(n, d);  // also the spill store for non-resident chunks
  run.row_max.assign(n, 0.0f);
  run.row_sum.assign(n, 0.0f);

  VectorReg v_q = eng.make_reg(), v_k = eng.make_reg(), v_a = eng.make_reg(),
            v_s = eng.make_reg(), v_max = eng.make_reg(), v_oldmax = eng.make_reg(),
            v_db = eng.make_reg(), v_b = eng.make_reg(), v_ds = eng.make_reg(),
            v_c = eng.make_reg(), v_sum = eng.make_reg(), v_oldsum = eng.make_reg(),
            v_v = eng.make_reg(), v_d = eng.make_reg(), v_part = eng.make_reg(),
            v_io = eng.make_reg();
  MaskReg lookahead = eng.make_mask();
  std::vector<VectorReg> o_acc;
  if (ctx.resident) o_acc.assign(ctx.chunks, eng.make_reg());

  // Block-buffer reuse for the multi-query schedule: within one
  // (row block, column block) pair the first row issues the K/V loads and
  // the remaining rows reuse the register contents.
  const bool reuse_kv = multiquery && ctx.br > 1;
  std::vector<VectorReg> k_cache, v_cache;
  if (reuse_kv) {
    k_cache.assign(d, eng.make_reg());
    v_cache.assign(static_cast<std::size_t>(vlen) * ctx.chunks, eng.make_reg());
  }

  struct RowState {
    float m;
    float ell;
  };
  std::vector<RowState> state;

  const std::uint32_t dim = static_cast<std::uint32_t>(d);
  for (std::size_t rb0 = 0; rb0 < n; rb0 += ctx.br) {
    const std::size_t rbw = std::min<std::size_t>(ctx.br, n - rb0);  // tail row block
    state.assign(rbw, RowState{kMaxSentinel, 0.0f});
    if (ctx.resident)
      for (auto& r : o_acc) r.fill_zero();

    for (std::size_t cb0 = 0; cb0 < n; cb0 += vlen) {
      const std::uint32_t bw = static_cast<std::uint32_t>(std::min<std::size_t>(vlen, n - cb0));
      for (std::size_t rr = 0; rr < rbw; ++rr) {
        const std::size_t row = rb0 + rr;
        const bool issue_kv = !reuse_kv || rr == 0;

        eng.splat(v_oldmax, state[rr].m);
        eng.splat(v_oldsum, state[rr].ell);

        // --- score phase: v_s accumulates q . K over this key block ---
        v_s.fill_zero();
        for (std::uint32_t h = 0; h < ctx.chunks; ++h) {
          const std::uint32_t hc0 = h * vlen;
          const std::uint32_t hw = std::min(vlen, dim - hc0);
          if (ctx.chunks == 1 && ctx.br == 1) {
            // Whole query row fits one register; load it once per query.
            if (cb0 == 0) eng.vload(v_q, p.q, row, 0, hw, Stream::q);
          } else {
            eng.vload(v_q, p.q, row, hc0, hw, Stream::q);
          }
          for (std::uint32_t j = 0; j < hw; ++j) {
            const std::uint32_t krow = hc0 + j;
            if (issue_kv) {
              eng.vload(v_k, p.k_t, krow, cb0, bw, Stream::k);
              if (reuse_kv) k_cache[krow] = v_k;
            } else {
              v_k = k_cache[krow];
            }
            eng.vrgather_bcast(v_a, v_q, j, bw);
            eng.vmacc(v_s, v_k, v_a, bw);
          }
        }
        if (cfg.scale_scores) eng.vfmul_vs(v_s, v_s, ctx.inv_sqrt_d, bw);

        // --- block max and exponentials of the score differences ---
        eng.vredmax(v_max, v_s, v_oldmax, bw);
        eng.vrgather_bcast(v_max, v_max, 0, vlen);
        eng.vfsub(v_db, v_oldmax, v_max, vlen);
        apply_exp(ctx, v_b, v_db, vlen);
        eng.vfsub(v_ds, v_s, v_max, bw);
        apply_exp(ctx, v_c, v_ds, bw);
        eng.vredsum(v_sum, v_c, bw);
        eng.vrgather_bcast(v_sum, v_sum, 0, vlen);
        // Lookahead mask: rescale previous state only where the max moved.
        eng.vmsneq(lookahead, v_oldmax, v_max, vlen);

        // --- output accumulation over the value rows of this block ---
        for (std::uint32_t h = 0; h < ctx.chunks; ++h) {
          const std::uint32_t hc0 = h * vlen;
          const std::uint32_t hw = std::min(vlen, dim - hc0);
          v_part.fill_zero();
          for (std::uint32_t j = 0; j < bw; ++j) {
            const std::size_t vrow = cb0 + bw - 1 - j;
            if (issue_kv) {
              eng.vload(v_v, p.v, vrow, hc0, hw, Stream::v);
              if (reuse_kv) v_cache[static_cast<std::size_t>(bw - 1 - j) * ctx.chunks + h] = v_v;
            } else {
              v_v = v_cache[static_cast<std::size_t>(bw - 1 - j) * ctx.chunks + h];
            }
            eng.vrgather_bcast(v_d, v_c, bw - 1 - j, hw);
            eng.vmacc(v_part, v_v, v_d, hw);
          }
          if (ctx.resident) {
            eng.vfmul_masked(o_acc[h], o_acc[h], v_b, lookahead, hw);
            eng.vfadd(o_acc[h], o_acc[h], v_part, hw);
          } else {
            eng.vload(v_io, run.output, row, hc0, hw, Stream::out);
            eng.vfmul_masked(v_io, v_io, v_b, lookahead, hw);
            eng.vfadd(v_io, v_io, v_part, hw);
            eng.vstore(v_io, run.output, row, hc0, hw, Stream::out);
          }
        }

        // --- fold the block sum into the running state ---
        eng.vfmul_masked(v_oldsum, v_oldsum, v_b, lookahead, vlen);
        eng.vfadd(v_sum, v_oldsum, v_sum, vlen);
        eng.vfmv(v_oldsum, v_sum, vlen);
        eng.vfmv(v_oldmax, v_max, vlen);
        state[rr].m = v_oldmax.f32(0);
        state[rr].ell = v_oldsum.f32(0);
      }
    }

    // --- normalize: divide the accumulated output by the exponent sum ---
    for (std::size_t rr = 0; rr < rbw; ++rr) {
      const std::size_t row = rb0 + rr;
      eng.splat(v_sum, state[rr].ell);
      for (std::uint32_t h = 0; h < ctx.chunks; ++h) {
        const std::uint32_t hc0 = h * vlen;
        const std::uint32_t hw = std::min(vlen, dim - hc0);
        if (ctx.resident) {
          eng.vfdiv(o_acc[h], o_acc[h], v_sum, hw);
          eng.vstore(o_acc[h], run.output, row, hc0, hw, Stream::out);
        } else {
          eng.vload(v_io, run.output, row, hc0, hw, Stream::out);
          eng.vfdiv(v_io, v_io, v_sum, hw);
          eng.vstore(v_io, run.output, row, hc0, hw, Stream::out);
        }
      }
      run.row_max[row] = state[rr].m;
      run.row_sum[row] = state[rr].ell;
    }
  }

  run.stats = eng.stats() - before;
  return run;
}

}  // namespace

KernelRun flash_vec(const AttentionProblem& p, const KernelConfig& cfg, Engine& engine) {
  if (p.head_dim() > cfg.vlen)
    throw ConfigError("flash_vec requires d <= vlen (got d = " + std::to_string(p.head_dim()) +
                      ", vlen = " + std::to_string(cfg.vlen) + "); use flash_vec_tiled");
  return run_kernel(p, cfg, engine, /*multiquery=*/false);
}

KernelRun flash_vec_tiled(const AttentionProblem& p, const KernelConfig& cfg, Engine& engine) {
  return run_kernel(p, cfg, engine, /*multiquery=*/false);
}

KernelRun flash_vec_multiquery(const AttentionProblem& p, const KernelConfig& cfg,
                               Engine& engine) {
  return run_kernel(p, cfg, engine, /*multiquery=*/true);
}

}  // namespace vfa
