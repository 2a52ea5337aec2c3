#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "treedec/error.hpp"
#include "treedec/oracle.hpp"
#include "treedec/sim.hpp"

namespace py = pybind11;
using namespace treedec;

namespace {

using Rows = std::vector<std::vector<double>>;
using IntRows = std::vector<std::vector<std::int64_t>>;

Matrix to_matrix(const Rows& rows) {
  if (rows.empty() || rows[0].empty()) throw Error(ErrorCode::DimensionMismatch, "empty matrix");
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "ragged rows");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Rows to_rows(const Matrix& m) {
  Rows out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

IntRows to_rows(const IntMatrix& m) {
  IntRows out(m.rows(), std::vector<std::int64_t>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

std::string simulate(const std::string& config, unsigned workers, bool shadow_oracle) {
  SweepOptions opt;
  opt.workers = workers;
  opt.shadow_oracle = shadow_oracle;
  const ExperimentConfig cfg = parse_config(config);
  py::gil_scoped_release release;
  return report_to_json(run_sweep(cfg, opt));
}

std::string compare(const std::vector<std::string>& configs, unsigned workers) {
  std::vector<ExperimentConfig> cfgs;
  for (const auto& c : configs) cfgs.push_back(parse_config(c));
  SweepOptions opt;
  opt.workers = workers;
  py::gil_scoped_release release;
  return comparison_to_json(compare_decoders(cfgs, opt));
}

std::string export_instance(const std::string& config, std::optional<double> snr_db, std::uint64_t frame) {
  const ExperimentConfig cfg = parse_config(config);
  return instance_to_json(make_instance(cfg, snr_db.value_or(cfg.snr_db.front()), frame));
}

py::dict decode(const std::string& instance, const std::optional<std::string>& config, bool trace) {
  const ChannelInstance inst = instance_from_json(instance);
  ExperimentConfig cfg;
  if (config) cfg = parse_config(*config);
  const DecodeResult res = decode_instance(inst, cfg.preprocessing, cfg.decoder, trace);
  const auto& o = res.outcome;
  py::dict d;
  d["status"] = to_string(o.status);
  d["info"] = res.info;
  d["distance"] = o.distance;
  d["node_generations"] = o.node_generations;
  d["unique_nodes"] = o.unique_nodes;
  d["restarts"] = o.restarts;
  d["budget_hit"] = o.budget_hit;
  d["out_of_set"] = res.out_of_set;
  if (!inst.x_true.empty())
    d["frame_error"] = inst.code.info_set.information(res.info) != inst.code.info_set.information(inst.x_true);
  if (trace) {
    std::ostringstream s;
    write_trace(s, o.trace);
    d["trace"] = s.str();
  }
  return d;
}

py::tuple exhaustive(const std::string& instance) {
  const OracleResult ml = exhaustive_ml(instance_from_json(instance));
  return py::make_tuple(ml.label, ml.distance, ml.tie);
}

py::dict lll(const Rows& basis, double delta, bool deep_insertion) {
  LllOptions opt;
  opt.delta = delta;
  opt.deep_insertion = deep_insertion;
  const Matrix b = to_matrix(basis);
  const LllResult res = lll_reduce(b, opt);
  py::dict d;
  d["basis"] = to_rows(res.basis);
  d["T"] = to_rows(res.record.t);
  d["T_inv"] = to_rows(res.record.t_inv);
  d["sparsity_before"] = sparsity_index(qr_decompose(b).r);
  d["sparsity_after"] = sparsity_index(qr_decompose(res.basis).r);
  return d;
}

py::tuple left(const Rows& h, const std::string& mode) {
  LeftMode m;
  if (mode == "mmse") m = LeftMode::Mmse;
  else if (mode == "zf") m = LeftMode::ZeroForcing;
  else throw Error(ErrorCode::ConfigError, "mode: expected zf or mmse");
  const LeftPreprocResult res = left_preprocess(to_matrix(h), m);
  return py::make_tuple(to_rows(res.forward), to_rows(res.backward));
}

}  // namespace

PYBIND11_MODULE(_treedec, m) {
  m.doc() = "Tree-search lattice decoders, preprocessing and Monte Carlo sweeps";

  static PyObject* error_type = py::exception<Error>(m, "Error", PyExc_ValueError).release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  m.def("simulate", &simulate, py::arg("config"), py::arg("workers") = 1, py::arg("shadow_oracle") = false,
        "Run the sweep described by a config JSON string; returns the report as JSON.");
  m.def("compare", &compare, py::arg("configs"), py::arg("workers") = 1);
  m.def("export_instance", &export_instance, py::arg("config"), py::arg("snr_db") = py::none(), py::arg("frame") = 0);
  m.def("decode", &decode, py::arg("instance"), py::arg("config") = py::none(), py::arg("trace") = false);
  m.def("exhaustive_ml", &exhaustive, py::arg("instance"), "(label, distance, tie) over the information set.");
  m.def("lll_reduce", &lll, py::arg("basis"), py::arg("delta") = 0.99, py::arg("deep_insertion") = false,
        "Columns are basis vectors.");
  m.def("left_preprocess", &left, py::arg("h"), py::arg("mode") = "mmse", "(Q1, R1).");
  m.def("validate_config", [](const std::string& c) { return config_to_json(parse_config(c)); }, py::arg("config"),
        "Normalized config JSON; raises on unknown keys or bad values.");
}
