#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dynreg/config.hpp"
#include "dynreg/core.hpp"
#include "dynreg/errors.hpp"
#include "dynreg/forward_eit.hpp"
#include "dynreg/harness.hpp"
#include "dynreg/lemma_suites.hpp"

namespace py = pybind11;
using namespace dynreg;

namespace {

py::dict level_summary(const LevelResult& L) {
  py::dict d;
  d["delta"] = L.delta;
  d["alpha"] = L.alpha;
  d["cum_err"] = L.cum_err;
  d["theorem_violations"] = L.has_theory ? L.theorem.violations() : -1;
  d["min_forward_solves"] = L.min_forward_solves;
  d["max_forward_solves"] = L.max_forward_solves;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dynreg, m) {
  m.doc() = "Online dynamic regularisation: schedules, EIT forward model, experiment runner";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);

  m.def("alpha_schedule", py::overload_cast<double>(&alpha_schedule), py::arg("delta"));
  m.def("speed_rescale", &speed_rescale, py::arg("t"));

  m.def(
      "verify_lemmas",
      [](std::uint64_t seed, int instances) {
        const LemmaReport r = verify_lemmas(seed, instances, false);
        py::list out;
        for (const auto& s : r.suites) {
          py::dict d;
          d["name"] = s.name;
          d["instances"] = s.instances;
          d["failures"] = s.failures;
          d["informational"] = s.informational;
          d["pass"] = s.pass();
          out.append(d);
        }
        return out;
      },
      py::arg("seed") = 7, py::arg("instances") = 100);

  m.def(
      "eit_currents",
      [](int rings, int electrodes, double zeta, const Vec& sigma) {
        const CemSystem sys(make_disk_mesh(rings, electrodes), zeta);
        return solve_forward(sys, sigma.size() ? sigma : Vec::Ones(sys.n_nodes()));
      },
      py::arg("rings") = 8, py::arg("electrodes") = 16, py::arg("zeta") = 0.01, py::arg("sigma") = Vec());

  m.def(
      "run_experiment",
      [](const std::string& config_json, const std::string& out_dir, bool write) {
        RunConfig base;
        RunConfig cfg = parse_config(config_json, base);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg, write);
        }
        py::dict d;
        py::list levels;
        for (const auto& L : r.levels) levels.append(level_summary(L));
        d["levels"] = levels;
        d["pass"] = r.pass;
        d["terminal_error_decreasing"] = terminal_error_decreasing(r.levels);
        return d;
      },
      py::arg("config_json") = "{}", py::arg("out_dir") = "", py::arg("write") = false);

  m.def("delta_tag", &delta_tag);
}
