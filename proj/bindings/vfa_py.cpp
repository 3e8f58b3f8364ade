// Python bindings for the main operations: the deterministic generator, the
// scalar references, the vectorized kernels with their instruction counters,
// and the low-cost exponential.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vfa/exp_approx.hpp"
#include "vfa/flash_kernel.hpp"
#include "vfa/harness.hpp"
#include "vfa/matrix_io.hpp"

namespace py = pybind11;
using namespace vfa;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Matrix matrix_from_array(const FloatArray& a, const char* name) {
  if (a.ndim() != 2) throw ConfigError(std::string(name) + " must be a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + m.size(), m.data());
  return m;
}

template <typename T>
py::array_t<T> array_from_matrix(const Mat<T>& m) {
  py::array_t<T> a({m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.size(), a.mutable_data());
  return a;
}

AttentionProblem problem_from_arrays(const FloatArray& q, const FloatArray& k,
                                     const FloatArray& v, bool scale_scores) {
  return make_problem(matrix_from_array(q, "q"), matrix_from_array(k, "k"),
                      matrix_from_array(v, "v"), scale_scores);
}

ExpMode parse_exp_mode(const std::string& s) {
  if (s == "exact") return ExpMode::exact;
  if (s == "approx") return ExpMode::approx;
  throw ConfigError("exp must be 'exact' or 'approx'");
}

py::dict stats_dict(const ExecStats& s) {
  py::dict d;
  d["vector_load"] = s.vector_load;
  d["vector_store"] = s.vector_store;
  d["gather_broadcast"] = s.gather_broadcast;
  d["multiply_accumulate"] = s.multiply_accumulate;
  d["reduction_max"] = s.reduction_max;
  d["reduction_sum"] = s.reduction_sum;
  d["mask_set"] = s.mask_set;
  d["masked_multiply"] = s.masked_multiply;
  d["add"] = s.add;
  d["multiply_vs"] = s.multiply_vs;
  d["divide"] = s.divide;
  d["move"] = s.move;
  d["convert_f2i"] = s.convert_f2i;
  d["add_int"] = s.add_int;
  d["exp_map"] = s.exp_map;
  d["total_instructions"] = s.total_instructions();
  d["elements_loaded"] = s.elements_loaded;
  d["elements_stored"] = s.elements_stored;
  d["loads_q"] = s.loads_by_stream[static_cast<std::size_t>(Stream::q)];
  d["loads_k"] = s.loads_by_stream[static_cast<std::size_t>(Stream::k)];
  d["loads_v"] = s.loads_by_stream[static_cast<std::size_t>(Stream::v)];
  d["loads_out"] = s.loads_by_stream[static_cast<std::size_t>(Stream::out)];
  d["stores_out"] = s.stores_by_stream[static_cast<std::size_t>(Stream::out)];
  return d;
}

py::dict run_result(KernelRun&& run) {
  py::dict d;
  d["output"] = array_from_matrix(run.output);
  d["stats"] = stats_dict(run.stats);
  d["row_max"] = py::array_t<float>(static_cast<py::ssize_t>(run.row_max.size()),
                                    run.row_max.data());
  d["row_sum"] = py::array_t<float>(static_cast<py::ssize_t>(run.row_sum.size()),
                                    run.row_sum.data());
  return d;
}

KernelConfig kernel_config(std::uint32_t vlen, std::uint32_t br, std::uint32_t unroll,
                           const std::string& exp, bool scale) {
  KernelConfig c;
  c.vlen = vlen;
  c.br = br;
  c.unroll = unroll;
  c.exp_mode = parse_exp_mode(exp);
  c.scale_scores = scale;
  return c;
}

template <typename Fn>
py::object dispatch_oracle(const FloatArray& q, const FloatArray& k, const FloatArray& v,
                           bool scale, const std::string& precision, Fn&& fn) {
  const auto p = problem_from_arrays(q, k, v, scale);
  if (precision == "f64") {
    py::array_t<double> out = array_from_matrix(fn(p, double{}));
    return out;
  }
  if (precision == "f32") {
    py::array_t<float> out = array_from_matrix(fn(p, float{}));
    return out;
  }
  throw ConfigError("precision must be 'f32' or 'f64'");
}

}  // namespace

PYBIND11_MODULE(vfa_py, m) {
  m.doc() = "single-head attention kernel lab: scalar references, vectorized "
            "online-softmax kernels on a countable vector-engine model, and the "
            "bit-trick exponential";

  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("gen_matrix",
        [](std::size_t rows, std::size_t cols, std::uint64_t seed) {
          return array_from_matrix(gen_matrix(rows, cols, seed));
        },
        py::arg("rows"), py::arg("cols"), py::arg("seed"),
        "Deterministic uniform [-1, 1) matrix from the fixed SplitMix64 stream");

  m.def("write_matrix_file",
        [](const FloatArray& a, const std::string& path) {
          write_matrix_file(matrix_from_array(a, "matrix"), path);
        },
        py::arg("matrix"), py::arg("path"));
  m.def("read_matrix_file",
        [](const std::string& path) { return array_from_matrix(read_matrix_file(path)); },
        py::arg("path"));

  m.def("attention_safe",
        [](const FloatArray& q, const FloatArray& k, const FloatArray& v, bool scale,
           const std::string& precision) {
          return dispatch_oracle(q, k, v, scale, precision, [](const auto& p, auto tag) {
            return attention_safe<decltype(tag)>(p);
          });
        },
        py::arg("q"), py::arg("k"), py::arg("v"), py::arg("scale") = false,
        py::arg("precision") = "f64");
  m.def("attention_lazy",
        [](const FloatArray& q, const FloatArray& k, const FloatArray& v, bool scale,
           const std::string& precision) {
          return dispatch_oracle(q, k, v, scale, precision, [](const auto& p, auto tag) {
            return attention_lazy<decltype(tag)>(p);
          });
        },
        py::arg("q"), py::arg("k"), py::arg("v"), py::arg("scale") = false,
        py::arg("precision") = "f64");
  m.def("flash_scalar",
        [](const FloatArray& q, const FloatArray& k, const FloatArray& v, bool scale,
           const std::string& precision) {
          return dispatch_oracle(q, k, v, scale, precision, [](const auto& p, auto tag) {
            return flash_scalar<decltype(tag)>(p);
          });
        },
        py::arg("q"), py::arg("k"), py::arg("v"), py::arg("scale") = false,
        py::arg("precision") = "f64");
  m.def("flash_blocked",
        [](const FloatArray& q, const FloatArray& k, const FloatArray& v, std::size_t block,
           bool scale, const std::string& precision) {
          return dispatch_oracle(q, k, v, scale, precision, [block](const auto& p, auto tag) {
            return flash_blocked<decltype(tag)>(p, block);
          });
        },
        py::arg("q"), py::arg("k"), py::arg("v"), py::arg("block"), py::arg("scale") = false,
        py::arg("precision") = "f64");

  m.def("flash_vec",
        [](const FloatArray& q, const FloatArray& k, const FloatArray& v, std::uint32_t vlen,
           const std::string& exp, bool scale) {
          const auto p = problem_from_arrays(q, k, v, scale);
          const auto cfg = kernel_config(vlen, 1, 1, exp, scale);
          Engine eng(EngineConfig{vlen});
          return run_result(flash_vec(p, cfg, eng));
        },
        py::arg("q"), py::arg("k"), py::arg("v"), py::arg("vlen") = 32,
        py::arg("exp") = "exact", py::arg("scale") = false);
  m.def("flash_vec_tiled",
        [](const FloatArray& q, const FloatArray& k, const FloatArray& v, std::uint32_t vlen,
           std::uint32_t unroll, const std::string& exp, bool scale) {
          const auto p = problem_from_arrays(q, k, v, scale);
          const auto cfg = kernel_config(vlen, 1, unroll, exp, scale);
          Engine eng(EngineConfig{vlen});
          return run_result(flash_vec_tiled(p, cfg, eng));
        },
        py::arg("q"), py::arg("k"), py::arg("v"), py::arg("vlen") = 32,
        py::arg("unroll") = 1, py::arg("exp") = "exact", py::arg("scale") = false);
  m.def("flash_vec_multiquery",
        [](const FloatArray& q, const FloatArray& k, const FloatArray& v, std::uint32_t vlen,
           std::uint32_t br, std::uint32_t unroll, const std::string& exp, bool scale) {
          const auto p = problem_from_arrays(q, k, v, scale);
          const auto cfg = kernel_config(vlen, br, unroll, exp, scale);
          Engine eng(EngineConfig{vlen});
          return run_result(flash_vec_multiquery(p, cfg, eng));
        },
        py::arg("q"), py::arg("k"), py::arg("v"), py::arg("vlen") = 32, py::arg("br") = 1,
        py::arg("unroll") = 1, py::arg("exp") = "exact", py::arg("scale") = false);

  m.def("exp_approx", [](float x) { return exp_approx_scalar(x); }, py::arg("x"),
        "Bit-trick approximation of e^x for x <= 0");
  m.def("quantize", [](float delta) { return quantize(delta); }, py::arg("delta"),
        "Fixed-point quantization of a non-positive score difference");

  m.def("scalar_flop_count",
        [](std::size_t seq_len, std::size_t head_dim, bool scale) {
          const auto c = scalar_flop_count(seq_len, head_dim, scale);
          py::dict d;
          d["multiply"] = c.multiply;
          d["add"] = c.add;
          d["exp"] = c.exp_calls;
          d["compare"] = c.compare;
          d["divide"] = c.divide;
          d["total"] = c.total();
          return d;
        },
        py::arg("seq_len"), py::arg("head_dim"), py::arg("scale") = false);
}
