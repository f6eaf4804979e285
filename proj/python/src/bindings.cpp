#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "nucasim/error.hpp"
#include "nucasim/harness.hpp"

namespace py = pybind11;
using namespace nucasim;

namespace {

WorkloadSpec make_spec(const std::string& workload, std::uint64_t n, int m, int reps,
                       std::uint64_t seed, bool intermediate_step) {
  WorkloadSpec s;
  s.kind = parse_workload_kind(workload);
  s.n = n;
  s.m = m;
  s.reps = reps;
  s.rng_seed = seed;
  s.intermediate_step = intermediate_step;
  return s;
}

SimParams make_params(const std::string& params_text, std::optional<bool> striping, bool caches) {
  std::istringstream in(params_text);
  SimParams p = parse_params(in);
  if (striping) p.sim.striping = *striping;
  if (!caches) p.sim.cache.caches_enabled = false;
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tiled NUCA manycore simulator";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<VerificationError>(m, "VerificationError", PyExc_RuntimeError);
  py::register_exception<SimulationFault>(m, "SimulationFault", PyExc_RuntimeError);

  m.attr("NUM_CASES") = kNumCases;

  m.def(
      "case_config",
      [](int id) {
        const CaseConfig c = case_config(id);
        py::dict d;
        d["id"] = c.id;
        d["localised"] = c.localised;
        d["mapping"] = std::string(to_string(c.mapping));
        d["hash_mode"] = std::string(to_string(c.hash_mode));
        return d;
      },
      py::arg("case_id"));

  m.def("csv_header", &csv_header);

  // Rows come back as a JSON array string; the Python layer decodes it.
  m.def(
      "run_json",
      [](int case_id, const std::string& workload, std::uint64_t n, int threads, int reps,
         std::uint64_t seed, bool intermediate_step, const std::string& params_text,
         std::optional<bool> striping, bool caches, bool csv) {
        const ReportRow row =
            run_case(case_id, make_spec(workload, n, threads, reps, seed, intermediate_step),
                     make_params(params_text, striping, caches));
        return format_rows({row}, csv ? "csv" : "json");
      },
      py::arg("case_id"), py::arg("workload"), py::arg("n"), py::arg("threads"), py::arg("reps"),
      py::arg("seed"), py::arg("intermediate_step"), py::arg("params_text"), py::arg("striping"),
      py::arg("caches"), py::arg("csv") = false, py::call_guard<py::gil_scoped_release>());

  m.def(
      "baseline",
      [](const std::string& workload, std::uint64_t n, int reps, std::uint64_t seed,
         const std::string& params_text) {
        return baseline(make_spec(workload, n, 1, reps, seed, false),
                        make_params(params_text, std::nullopt, true));
      },
      py::arg("workload"), py::arg("n"), py::arg("reps"), py::arg("seed"), py::arg("params_text"),
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "sweep_json",
      [](const std::string& axis, const std::vector<std::string>& values, int case_id,
         const std::string& workload, std::uint64_t n, int threads, int reps, std::uint64_t seed,
         const std::string& params_text, int jobs) {
        const auto rows = sweep(parse_sweep_axis(axis), values, case_id,
                                make_spec(workload, n, threads, reps, seed, false),
                                make_params(params_text, std::nullopt, true), jobs);
        return to_json(rows);
      },
      py::arg("axis"), py::arg("values"), py::arg("case_id"), py::arg("workload"), py::arg("n"),
      py::arg("threads"), py::arg("reps"), py::arg("seed"), py::arg("params_text"),
      py::arg("jobs"), py::call_guard<py::gil_scoped_release>());
}
