#include "vfa/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vfa {

namespace {

template <typename T>
T score_dot(const AttentionProblem& p, std::size_t row, std::size_t key) {
  const std::size_t d = p.head_dim();
  T s{0};
  for (std::size_t j = 0; j < d; ++j)
    s += static_cast<T>(p.q(row, j)) * static_cast<T>(p.k_t(j, key));
  return s;
}

template <typename T>
T scale_factor(const AttentionProblem& p) {
  return p.scale_scores ? static_cast<T>(1.0 / std::sqrt(static_cast<double>(p.head_dim())))
                        : T{1};
}

void check_finite_output(bool ok) {
  if (!ok) throw NumericError("attention: non-finite intermediate value");
}

}  // namespace

void AttentionProblem::validate() const {
  const std::size_t n = q.rows(), d = q.cols();
  if (n == 0 || d == 0) throw ConfigError("attention problem: dimensions must be >= 1");
  if (k_t.rows() != d || k_t.cols() != n)
    throw ConfigError("attention problem: transposed keys must be " + std::to_string(d) + "x" +
                      std::to_string(n) + ", got " + std::to_string(k_t.rows()) + "x" +
                      std::to_string(k_t.cols()));
  if (v.rows() != n || v.cols() != d)
    throw ConfigError("attention problem: values must be " + std::to_string(n) + "x" +
                      std::to_string(d) + ", got " + std::to_string(v.rows()) + "x" +
                      std::to_string(v.cols()));
  if (!q.all_finite() || !k_t.all_finite() || !v.all_finite())
    throw NumericError("attention problem: inputs must be finite");
}

AttentionProblem make_problem(Matrix q, Matrix k_rows, Matrix v, bool scale_scores) {
  if (k_rows.rows() != q.rows() || k_rows.cols() != q.cols())
    throw ConfigError("make_problem: K must have the same N x d shape as Q");
  AttentionProblem p{std::move(q), k_rows.transposed(), std::move(v), scale_scores};
  p.validate();
  return p;
}

template <typename T>
Mat<T> attention_safe(const AttentionProblem& p, T score_bias) {
  p.validate();
  const std::size_t n = p.seq_len(), d = p.head_dim();
  const T sf = scale_factor<T>(p);
  Mat<T> out(n, d);
  std::vector<T> s(n), w(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = score_dot<T>(p, r, i);
      if (p.scale_scores) s[i] *= sf;
      if (score_bias != T{0}) s[i] += score_bias;
    }
    T m = s[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, s[i]);
    T ell{0};
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = std::exp(s[i] - m);
      ell += w[i];
    }
    check_finite_output(std::isfinite(static_cast<double>(ell)) && ell > T{0});
    for (std::size_t i = 0; i < n; ++i) w[i] /= ell;
    for (std::size_t j = 0; j < d; ++j) {
      T acc{0};
      for (std::size_t i = 0; i < n; ++i) acc += w[i] * static_cast<T>(p.v(i, j));
      check_finite_output(std::isfinite(static_cast<double>(acc)));
      out(r, j) = acc;
    }
  }
  return out;
}

template <typename T>
Mat<T> attention_lazy(const AttentionProblem& p) {
  p.validate();
  const std::size_t n = p.seq_len(), d = p.head_dim();
  const T sf = scale_factor<T>(p);
  Mat<T> out(n, d);
  std::vector<T> s(n), o(d);
  for (std::size_t r = 0; r < n; ++r) {
    // Pass 1: scores and the running maximum.
    T m = -std::numeric_limits<T>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = score_dot<T>(p, r, i);
      if (p.scale_scores) s[i] *= sf;
      m = std::max(m, s[i]);
    }
    // Pass 2: accumulate weighted values and the exponent sum.
    T ell{0};
    std::fill(o.begin(), o.end(), T{0});
    for (std::size_t i = 0; i < n; ++i) {
      const T w = std::exp(s[i] - m);
      for (std::size_t j = 0; j < d; ++j) o[j] += w * static_cast<T>(p.v(i, j));
      ell += w;
    }
    check_finite_output(std::isfinite(static_cast<double>(ell)) && ell > T{0});
    for (std::size_t j = 0; j < d; ++j) {
      out(r, j) = o[j] / ell;
      check_finite_output(std::isfinite(static_cast<double>(out(r, j))));
    }
  }
  return out;
}

template <typename T>
Mat<T> flash_scalar(const AttentionProblem& p) {
  p.validate();
  const std::size_t n = p.seq_len(), d = p.head_dim();
  const T sf = scale_factor<T>(p);
  Mat<T> out(n, d);
  std::vector<T> o(d);
  for (std::size_t r = 0; r < n; ++r) {
    // m starts at -inf and l at 0, so the first step's rescaling term
    // contributes 0 * e^(-inf) = 0 without a special case.
    T m = -std::numeric_limits<T>::infinity();
    T ell{0};
    std::fill(o.begin(), o.end(), T{0});
    for (std::size_t i = 0; i < n; ++i) {
      T s = score_dot<T>(p, r, i);
      if (p.scale_scores) s *= sf;
      const T m_new = std::max(m, s);
      const T corr = std::exp(m - m_new);
      const T w = std::exp(s - m_new);
      ell = ell * corr + w;
      for (std::size_t j = 0; j < d; ++j)
        o[j] = o[j] * corr + w * static_cast<T>(p.v(i, j));
      m = m_new;
    }
    check_finite_output(std::isfinite(static_cast<double>(ell)) && ell > T{0});
    for (std::size_t j = 0; j < d; ++j) {
      out(r, j) = o[j] / ell;
      check_finite_output(std::isfinite(static_cast<double>(out(r, j))));
    }
  }
  return out;
}

template <typename T>
Mat<T> flash_blocked(const AttentionProblem& p, std::size_t block) {
  p.validate();
  const std::size_t n = p.seq_len(), d = p.head_dim();
  if (block < 1 || block > n)
    throw ConfigError("flash_blocked: block size must lie in [1, N]");
  const T sf = scale_factor<T>(p);
  Mat<T> out(n, d);
  std::vector<T> s(block), w(block), o(d);
  for (std::size_t r = 0; r < n; ++r) {
    T m = -std::numeric_limits<T>::infinity();
    T ell{0};
    std::fill(o.begin(), o.end(), T{0});
    for (std::size_t b0 = 0; b0 < n; b0 += block) {
      const std::size_t bw = std::min(block, n - b0);  // tail block may be shorter
      T m_new = m;
      for (std::size_t i = 0; i < bw; ++i) {
        s[i] = score_dot<T>(p, r, b0 + i);
        if (p.scale_scores) s[i] *= sf;
        m_new = std::max(m_new, s[i]);
      }
      const T corr = std::exp(m - m_new);
      T bsum{0};
      for (std::size_t i = 0; i < bw; ++i) {
        w[i] = std::exp(s[i] - m_new);
        bsum += w[i];
      }
      ell = ell * corr + bsum;
      for (std::size_t j = 0; j < d; ++j) {
        T part{0};
        for (std::size_t i = 0; i < bw; ++i) part += w[i] * static_cast<T>(p.v(b0 + i, j));
        o[j] = o[j] * corr + part;
      }
      m = m_new;
    }
    check_finite_output(std::isfinite(static_cast<double>(ell)) && ell > T{0});
    for (std::size_t j = 0; j < d; ++j) {
      out(r, j) = o[j] / ell;
      check_finite_output(std::isfinite(static_cast<double>(out(r, j))));
    }
  }
  return out;
}

template <typename T>
FlashTrace<T> flash_scalar_trace(const AttentionProblem& p, std::size_t row) {
  p.validate();
  if (row >= p.seq_len()) throw std::out_of_range("flash_scalar_trace: row out of range");
  const std::size_t n = p.seq_len();
  const T sf = scale_factor<T>(p);
  FlashTrace<T> tr;
  tr.max_trace.reserve(n);
  tr.sum_trace.reserve(n);
  T m = -std::numeric_limits<T>::infinity();
  T ell{0};
  for (std::size_t i = 0; i < n; ++i) {
    T s = score_dot<T>(p, row, i);
    if (p.scale_scores) s *= sf;
    const T m_new = std::max(m, s);
    ell = ell * std::exp(m - m_new) + std::exp(s - m_new);
    m = m_new;
    tr.max_trace.push_back(m);
    tr.sum_trace.push_back(ell);
  }
  return tr;
}

ScalarOpCount scalar_flop_count(std::size_t seq_len, std::size_t head_dim, bool scale_scores) {
  // Mirrors flash_scalar exactly: per key a d-term dot product (d mul, d add),
  // one max compare, two subtract+exp pairs, the l update (mul, add) and the
  // output update (2d mul, d add); one division per output element.
  const std::uint64_t n = seq_len, d = head_dim;
  ScalarOpCount c;
  c.multiply = n * n * (3 * d + 1) + (scale_scores ? n * n : 0);
  c.add = n * n * (2 * d + 3);
  c.exp_calls = 2 * n * n;
  c.compare = n * n;
  c.divide = n * d;
  return c;
}

ScalarOpCount scalar_flop_count(const AttentionProblem& p) {
  return scalar_flop_count(p.seq_len(), p.head_dim(), p.scale_scores);
}

// The oracles are generic over binary32 and binary64; both widths are part of
// the library surface.
template Mat<float> attention_safe<float>(const AttentionProblem&, float);
template Mat<double> attention_safe<double>(const AttentionProblem&, double);
template Mat<float> attention_lazy<float>(const AttentionProblem&);
template Mat<double> attention_lazy<double>(const AttentionProblem&);
template Mat<float> flash_scalar<float>(const AttentionProblem&);
template Mat<double> flash_scalar<double>(const AttentionProblem&);
template Mat<float> flash_blocked<float>(const AttentionProblem&, std::size_t);
template Mat<double> flash_blocked<double>(const AttentionProblem&, std::size_t);
template FlashTrace<float> flash_scalar_trace<float>(const AttentionProblem&, std::size_t);
template FlashTrace<double> flash_scalar_trace<double>(const AttentionProblem&, std::size_t);

}  // namespace vfa
