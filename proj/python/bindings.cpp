#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lndev/builtins.hpp"
#include "lndev/conditions.hpp"
#include "lndev/error.hpp"
#include "lndev/scenario.hpp"

namespace py = pybind11;
using namespace lndev;

namespace {

py::dict report_dict(const ClassificationReport& rep) {
  py::dict out;
  for (const auto& p : rep.properties) {
    py::dict d;
    d["applicable"] = p.applicable;
    d["holds"] = p.holds;
    d["residual"] = p.residual;
    d["threshold"] = p.threshold;
    d["recovered"] = p.recovered;
    d["note"] = p.note;
    out[py::str(p.name)] = d;
  }
  return out;
}

BuiltinParams params_from(const py::kwargs& kw) {
  BuiltinParams p;
  for (const auto& [k, v] : kw) {
    const std::string key = py::cast<std::string>(k);
    if (key == "n") p.n = py::cast<int>(v);
    else if (key == "a") p.a = py::cast<double>(v);
    else if (key == "c") p.c = py::cast<double>(v);
    else if (key == "M") p.M = py::cast<double>(v);
    else if (key == "b") p.b = py::cast<double>(v);
    else if (key == "w") p.w = py::cast<std::vector<double>>(v);
    else throw py::type_error("unknown builtin parameter '" + key + "'");
  }
  return p;
}

}  // namespace

PYBIND11_MODULE(_lndev, m) {
  m.doc() = "Deviation equations on spaces with affine connection and metric";

  // Later registrations are tried first, so the most specific type goes last.
  py::register_exception<Error>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("task_names", &task_names, "Tasks accepted by run_scenario.");
  m.def("builtin_names", &builtin_names);

  m.def(
      "normalize_scenario", [](const std::string& text) { return serialize_scenario(parse_scenario(text)); },
      py::arg("text"), "Parse scenario text and write it back with every default filled in.");

  m.def(
      "run_scenario",
      [](const std::string& text, const std::string& task, std::optional<std::string> out_dir,
         std::optional<std::uint64_t> seed, std::optional<double> tol, bool write_files) {
        RunOptions opt;
        opt.out_dir = std::move(out_dir);
        opt.seed = seed;
        opt.tolerance = tol;
        opt.write_files = write_files;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_scenario(parse_scenario(text), parse_task(task), opt);
        }
        py::dict d;
        d["exit_code"] = r.exit_code;
        d["report"] = r.report;
        d["csv"] = r.csv;
        d["files"] = r.files;
        return d;
      },
      py::arg("text"), py::arg("task"), py::kw_only(), py::arg("out_dir") = py::none(),
      py::arg("seed") = py::none(), py::arg("tol") = py::none(), py::arg("write_files") = false,
      "Run one task on scenario text. Returns exit_code, report, csv and files.");

  m.def(
      "classify_builtin",
      [](const std::string& name, int points, std::uint64_t seed, const py::kwargs& kw) {
        const BuiltinSpace b = make_builtin(name, params_from(kw));
        const auto rep = classify_space(b.space, sample_points(b.box, points, seed));
        py::dict out;
        out["properties"] = report_dict(rep);
        out["expected"] = b.expected;
        out["expected_data"] = b.expected_data;
        return out;
      },
      py::arg("name"), py::arg("points") = 8, py::arg("seed") = 1,
      "Classify a builtin space; keyword arguments are its parameters (n, a, c, M, b, w).");

  m.def("compensation_setup", [] {
    const auto cs = compensation_setup();
    py::dict d;
    d["point"] = cs.point;
    d["u"] = cs.u;
    d["xi"] = cs.xi;
    return d;
  });

  m.def("format_double", &format_double, "17 significant digits, locale independent.");
}
