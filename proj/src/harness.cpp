#include "vfa/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "vfa/exp_approx.hpp"
#include "vfa/matrix_io.hpp"

namespace vfa {

namespace {

using ordered_json = nlohmann::ordered_json;

bool known_impl(const std::string& name) {
  for (const char* s : kImplNames)
    if (name == s) return true;
  return false;
}

bool is_vector_impl(const std::string& name) {
  return name == "flash-vec" || name == "flash-vec-tiled" || name == "flash-vec-mq";
}

Matrix to_f32(const Mat<double>& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = static_cast<float>(m.data()[i]);
  return out;
}

Matrix to_f32(const Mat<float>& m) { return m; }

// Report columns, in emission order. CSV rows and JSON objects are built from
// the same sequence so the two formats always agree value-for-value.
struct Field {
  std::string key;
  ordered_json value;
};

std::vector<Field> report_fields(const RunReport& r) {
  const RunRequest& q = r.request;
  std::vector<Field> f;
  f.push_back({"impl", q.impl});
  f.push_back({"seq_len", q.seq_len});
  f.push_back({"head_dim", q.head_dim});
  f.push_back({"vlen", q.config.vlen});
  f.push_back({"br", q.config.br});
  f.push_back({"unroll", q.config.unroll});
  f.push_back({"exp_mode", q.config.exp_mode == ExpMode::approx ? "approx" : "exact"});
  f.push_back({"scale_scores", q.config.scale_scores});
  f.push_back({"source", q.file_source() ? "files" : "gen"});
  f.push_back({"seed", q.seed});
  const ExecStats& s = r.stats;
  f.push_back({"vector_load", s.vector_load});
  f.push_back({"vector_store", s.vector_store});
  f.push_back({"gather_broadcast", s.gather_broadcast});
  f.push_back({"multiply_accumulate", s.multiply_accumulate});
  f.push_back({"reduction_max", s.reduction_max});
  f.push_back({"reduction_sum", s.reduction_sum});
  f.push_back({"mask_set", s.mask_set});
  f.push_back({"masked_multiply", s.masked_multiply});
  f.push_back({"add", s.add});
  f.push_back({"multiply_vs", s.multiply_vs});
  f.push_back({"divide", s.divide});
  f.push_back({"move", s.move});
  f.push_back({"convert_f2i", s.convert_f2i});
  f.push_back({"add_int", s.add_int});
  f.push_back({"exp_map", s.exp_map});
  f.push_back({"total_vector_instructions", s.total_instructions()});
  f.push_back({"elements_loaded", s.elements_loaded});
  f.push_back({"elements_stored", s.elements_stored});
  f.push_back({"loads_q", s.loads_by_stream[static_cast<std::size_t>(Stream::q)]});
  f.push_back({"loads_k", s.loads_by_stream[static_cast<std::size_t>(Stream::k)]});
  f.push_back({"loads_v", s.loads_by_stream[static_cast<std::size_t>(Stream::v)]});
  f.push_back({"loads_out", s.loads_by_stream[static_cast<std::size_t>(Stream::out)]});
  f.push_back({"stores_out", s.stores_by_stream[static_cast<std::size_t>(Stream::out)]});
  f.push_back({"scalar_multiply", r.scalar_ops.multiply});
  f.push_back({"scalar_add", r.scalar_ops.add});
  f.push_back({"scalar_exp", r.scalar_ops.exp_calls});
  f.push_back({"scalar_compare", r.scalar_ops.compare});
  f.push_back({"scalar_divide", r.scalar_ops.divide});
  f.push_back({"scalar_total", r.scalar_ops.total()});
  f.push_back({"speedup_proxy", r.speedup_proxy ? ordered_json(*r.speedup_proxy) : ordered_json()});
  f.push_back({"check", q.check});
  f.push_back({"tolerance", q.tolerance});
  f.push_back({"max_abs_error", r.errors ? ordered_json(r.errors->max_abs) : ordered_json()});
  f.push_back({"mean_abs_error", r.errors ? ordered_json(r.errors->mean_abs) : ordered_json()});
  f.push_back({"max_rel_error", r.errors ? ordered_json(r.errors->max_rel) : ordered_json()});
  f.push_back({"mean_rel_error", r.errors ? ordered_json(r.errors->mean_rel) : ordered_json()});
  if (r.wall_ms) f.push_back({"wall_ms", *r.wall_ms});
  return f;
}

std::string csv_cell(const ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

void RunRequest::validate() const {
  if (!known_impl(impl)) throw ConfigError("unknown implementation '" + impl + "'");
  if (!(tolerance > 0)) throw ConfigError("tolerance must be positive");
  const bool files = file_source();
  if (files) {
    if (q_path.empty() || k_path.empty() || v_path.empty())
      throw ConfigError("file input needs all of q, k and v paths");
    if (seq_len != 0 || head_dim != 0)
      throw ConfigError("choose one input source: files or generated dimensions");
  } else {
    if (seq_len == 0 || head_dim == 0)
      throw ConfigError("generated input needs seq-len and head-dim");
  }
}

AttentionProblem problem_for_request(const RunRequest& req) {
  Matrix q, k, v;
  if (req.file_source()) {
    q = read_matrix_file(req.q_path);
    k = read_matrix_file(req.k_path);
    v = read_matrix_file(req.v_path);
    if (k.rows() != q.rows() || k.cols() != q.cols() || v.rows() != q.rows() ||
        v.cols() != q.cols())
      throw ConfigError("q, k and v must all be N x d with matching shapes (q is " +
                        std::to_string(q.rows()) + "x" + std::to_string(q.cols()) + ", k is " +
                        std::to_string(k.rows()) + "x" + std::to_string(k.cols()) + ", v is " +
                        std::to_string(v.rows()) + "x" + std::to_string(v.cols()) + ")");
  } else {
    q = gen_matrix(req.seq_len, req.head_dim, req.seed);
    k = gen_matrix(req.seq_len, req.head_dim, req.seed + 1);
    v = gen_matrix(req.seq_len, req.head_dim, req.seed + 2);
  }
  return make_problem(std::move(q), std::move(k), std::move(v), req.config.scale_scores);
}

ErrorMetrics compare_to_reference(const Matrix& got, const Mat<double>& ref) {
  if (got.rows() != ref.rows() || got.cols() != ref.cols())
    throw ConfigError("error metrics: shape mismatch");
  double ref_scale = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i)
    ref_scale = std::max(ref_scale, std::abs(ref.data()[i]));
  if (ref_scale == 0.0) ref_scale = 1.0;
  ErrorMetrics m;
  double sum_abs = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double diff = std::abs(static_cast<double>(got.data()[i]) - ref.data()[i]);
    m.max_abs = std::max(m.max_abs, diff);
    sum_abs += diff;
  }
  m.mean_abs = sum_abs / static_cast<double>(ref.size());
  m.max_rel = m.max_abs / ref_scale;
  m.mean_rel = m.mean_abs / ref_scale;
  return m;
}

RunReport execute_run(const RunRequest& req) {
  req.validate();
  const AttentionProblem problem = problem_for_request(req);

  RunReport rep;
  rep.request = req;
  rep.request.seq_len = problem.seq_len();
  rep.request.head_dim = problem.head_dim();
  rep.vector_impl = is_vector_impl(req.impl);
  rep.scalar_ops = scalar_flop_count(problem);

  const auto t0 = std::chrono::steady_clock::now();
  Matrix out;
  if (req.impl == "baseline") {
    out = to_f32(attention_safe<float>(problem));
  } else if (req.impl == "lazy") {
    out = to_f32(attention_lazy<float>(problem));
  } else if (req.impl == "flash-scalar") {
    out = to_f32(flash_scalar<float>(problem));
  } else if (req.impl == "flash-blocked") {
    // Block size follows the key-column blocking convention: one vector length.
    out = to_f32(flash_blocked<float>(problem, std::min<std::size_t>(req.config.vlen,
                                                                     problem.seq_len())));
  } else {
    Engine engine(EngineConfig{req.config.vlen});
    KernelRun run;
    if (req.impl == "flash-vec")
      run = flash_vec(problem, req.config, engine);
    else if (req.impl == "flash-vec-tiled")
      run = flash_vec_tiled(problem, req.config, engine);
    else
      run = flash_vec_multiquery(problem, req.config, engine);
    out = std::move(run.output);
    rep.stats = run.stats;
    rep.speedup_proxy = static_cast<double>(rep.scalar_ops.total()) /
                        static_cast<double>(rep.stats.total_instructions());
  }
  const auto t1 = std::chrono::steady_clock::now();
  if (req.timing)
    rep.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  if (req.check) {
    const Mat<double> ref = attention_safe<double>(problem);
    rep.errors = compare_to_reference(out, ref);
  }
  if (!req.out_path.empty()) write_matrix_file(out, req.out_path);
  return rep;
}

std::vector<RunReport> execute_sweep(const std::vector<RunRequest>& reqs) {
  std::vector<RunReport> out;
  out.reserve(reqs.size());
  for (const auto& r : reqs) out.push_back(execute_run(r));
  return out;
}

ordered_json RunReport::to_json() const {
  ordered_json j = ordered_json::object();
  for (auto& f : report_fields(*this)) j[f.key] = f.value;
  return j;
}

std::string RunReport::csv_header() {
  RunReport dummy;
  dummy.request.impl = "flash-vec";
  std::string h;
  for (auto& f : report_fields(dummy)) {
    if (!h.empty()) h += ',';
    h += f.key;
  }
  return h;
}

std::string RunReport::csv_row() const {
  std::string row;
  bool first = true;
  for (auto& f : report_fields(*this)) {
    if (!first) row += ',';
    first = false;
    row += csv_cell(f.value);
  }
  return row;
}

std::string sweep_to_csv(const std::vector<RunReport>& reports) {
  std::string out = RunReport::csv_header() + "\n";
  for (const auto& r : reports) out += r.csv_row() + "\n";
  return out;
}

ordered_json sweep_to_json(const std::vector<RunReport>& reports) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) arr.push_back(r.to_json());
  return arr;
}

RunRequest request_from_json(const nlohmann::json& j) {
  RunRequest r;
  if (j.contains("impl")) r.impl = j.at("impl").get<std::string>();
  if (j.contains("seq_len")) r.seq_len = j.at("seq_len").get<std::size_t>();
  if (j.contains("head_dim")) r.head_dim = j.at("head_dim").get<std::size_t>();
  if (j.contains("seed")) r.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("q")) r.q_path = j.at("q").get<std::string>();
  if (j.contains("k")) r.k_path = j.at("k").get<std::string>();
  if (j.contains("v")) r.v_path = j.at("v").get<std::string>();
  if (j.contains("vlen")) r.config.vlen = j.at("vlen").get<std::uint32_t>();
  if (j.contains("br")) r.config.br = j.at("br").get<std::uint32_t>();
  if (j.contains("unroll")) r.config.unroll = j.at("unroll").get<std::uint32_t>();
  if (j.contains("exp")) {
    const auto mode = j.at("exp").get<std::string>();
    if (mode == "exact")
      r.config.exp_mode = ExpMode::exact;
    else if (mode == "approx")
      r.config.exp_mode = ExpMode::approx;
    else
      throw ConfigError("exp must be 'exact' or 'approx', got '" + mode + "'");
  }
  if (j.contains("scale")) r.config.scale_scores = j.at("scale").get<bool>();
  if (j.contains("check")) r.check = j.at("check").get<bool>();
  if (j.contains("tolerance")) r.tolerance = j.at("tolerance").get<double>();
  if (j.contains("timing")) r.timing = j.at("timing").get<bool>();
  if (j.contains("out")) r.out_path = j.at("out").get<std::string>();
  return r;
}

ordered_json experr_report(std::size_t samples, double domain_lo, double domain_hi,
                           std::uint64_t seed) {
  if (!(domain_lo < domain_hi) || domain_hi > 0.0)
    throw ConfigError("experr domain must satisfy lo < hi <= 0");
  const QuantSpec& spec = default_quant_spec();

  SplitMix64 rng(seed);
  double max_rel = 0.0, sum_rel = 0.0, max_rel_at = 0.0;
  double clip_max_rel = 0.0, clip_sum_rel = 0.0;
  std::size_t clip_count = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double u = static_cast<double>(rng.next() >> 11) * 0x1p-53;
    const float x = static_cast<float>(domain_lo + u * (domain_hi - domain_lo));
    const double approx = exp_approx_scalar(x, spec);
    const double exact = std::exp(static_cast<double>(x));
    const double rel = std::abs(approx - exact) / exact;
    if (x < spec.clip_threshold) {
      clip_max_rel = std::max(clip_max_rel, rel);
      clip_sum_rel += rel;
      ++clip_count;
    } else {
      if (rel > max_rel) {
        max_rel = rel;
        max_rel_at = x;
      }
      sum_rel += rel;
    }
  }

  ordered_json dyadic = ordered_json::array();
  for (int k = 0; k <= 15; ++k) {
    const float x = static_cast<float>(-k * std::log(2.0));
    const double approx = exp_approx_scalar(x, spec);
    const double exact = std::ldexp(1.0, -k);
    dyadic.push_back({{"k", k},
                      {"x", x},
                      {"approx", approx},
                      {"exact", exact},
                      {"rel_error", std::abs(approx - exact) / exact}});
  }

  const std::size_t unclipped = samples - clip_count;
  ordered_json j = ordered_json::object();
  j["samples"] = samples;
  j["domain_lo"] = domain_lo;
  j["domain_hi"] = domain_hi;
  j["seed"] = seed;
  j["quant_bits"] = spec.bits;
  j["clip_magnitude"] = spec.clip_magnitude;
  j["scale"] = spec.scale;
  j["exponent_bias"] = spec.exponent_bias;
  j["mantissa_width"] = spec.mantissa_width;
  j["clip_threshold"] = spec.clip_threshold;
  j["fused_scale"] = spec.fused_scale;
  j["clip_value"] = spec.clip_value;
  j["max_rel_error"] = max_rel;
  j["mean_rel_error"] = unclipped ? sum_rel / static_cast<double>(unclipped) : 0.0;
  j["max_rel_error_at"] = max_rel_at;
  j["dyadic_points"] = dyadic;
  if (clip_count) {
    // Below the clip threshold the approximation is the constant e^threshold,
    // so the error there is |e^threshold - e^x| / e^x; reported separately.
    j["clipped"] = {{"samples", clip_count},
                    {"max_rel_error", clip_max_rel},
                    {"mean_rel_error", clip_sum_rel / static_cast<double>(clip_count)}};
  }
  return j;
}

}  // namespace vfa
