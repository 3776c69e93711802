#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tfsns/control.hpp"
#include "tfsns/dynamics.hpp"
#include "tfsns/errors.hpp"
#include "tfsns/experiments.hpp"
#include "tfsns/specfun.hpp"
#include "tfsns/spectral.hpp"
#include "tfsns/stochastic.hpp"

namespace py = pybind11;
using namespace tfsns;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral-Galerkin lab for time-fractional stochastic Navier-Stokes models.";
  m.attr("__version__") = TFSNS_VERSION;

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  m.def("mittag_leffler", py::overload_cast<double, double, double>(&specfun::mittag_leffler),
        py::arg("a"), py::arg("b"), py::arg("x"));
  m.def("mainardi", py::overload_cast<double, double>(&specfun::mainardi),
        py::arg("eta"), py::arg("s"));
  m.def(
      "ml_via_mainardi_quadrature",
      [](double a, double x, const std::string& mode) {
        if (mode != "first" && mode != "second") {
          throw ParameterError("mode must be 'first' or 'second'");
        }
        return specfun::ml_via_mainardi_quadrature(
            a, x, mode == "first" ? specfun::MainardiMoment::first
                                  : specfun::MainardiMoment::second);
      },
      py::arg("a"), py::arg("x"), py::arg("mode") = "first");

  py::class_<spectral::BasisSpec>(m, "BasisSpec")
      .def_property_readonly("kind", [](const spectral::BasisSpec& b) { return spectral::to_string(b.kind); })
      .def_readonly("N", &spectral::BasisSpec::N)
      .def_readonly("nu", &spectral::BasisSpec::nu)
      .def_readonly("alpha", &spectral::BasisSpec::alpha)
      .def_readonly("eigenvalues", &spectral::BasisSpec::eigenvalues)
      .def_readonly("frac_eigenvalues", &spectral::BasisSpec::frac_eigenvalues);

  m.def(
      "build_basis",
      [](const std::string& kind, int N, double nu, double alpha) {
        return spectral::build_basis(spectral::parse_basis_kind(kind), N, nu, alpha);
      },
      py::arg("kind"), py::arg("N"), py::arg("nu") = 1.0, py::arg("alpha") = 2.0);
  m.def("apply_fractional_power", &spectral::apply_fractional_power,
        py::arg("basis"), py::arg("f"), py::arg("gamma"));
  m.def("sobolev_norm", &spectral::sobolev_norm, py::arg("basis"), py::arg("f"),
        py::arg("beta"));
  m.def("apply_M_eta", &spectral::apply_M_eta, py::arg("basis"), py::arg("t"),
        py::arg("f"), py::arg("eta"));
  m.def("apply_M_eta_eta", &spectral::apply_M_eta_eta, py::arg("basis"),
        py::arg("t"), py::arg("f"), py::arg("eta"));

  m.def(
      "validate_params",
      [](double eta, double alpha, double beta, double p) {
        dynamics::ModelParams mp;
        mp.eta = eta;
        mp.alpha = alpha;
        mp.beta = beta;
        mp.p = p;
        py::list out;
        for (const auto& c : dynamics::validate_params(mp).conditions) {
          py::dict d;
          d["name"] = c.name;
          d["formula"] = c.formula;
          d["value"] = c.value;
          d["pass"] = c.pass;
          out.append(d);
        }
        return out;
      },
      py::arg("eta"), py::arg("alpha"), py::arg("beta"), py::arg("p"));

  m.def("bdg_constant", &stochastic::bdg_constant, py::arg("p"));
  m.def(
      "grammian_diag",
      [](const spectral::BasisSpec& b, double eta, double T,
         const Eigen::VectorXd& c, int n_quad) {
        return control::grammian_diag(b, eta, T, c, n_quad).gamma;
      },
      py::arg("basis"), py::arg("eta"), py::arg("T"), py::arg("c"),
      py::arg("n_quad") = 128);

  m.def(
      "run",
      [](const std::string& sub, const std::string& config_text,
         std::optional<std::uint64_t> seed, bool override_validation) {
        auto cfg = cli::parse_config(config_text);
        if (seed) cli::set_seed(cfg, *seed);
        const auto out = cli::run_subcommand(sub, cfg, override_validation);
        py::dict tables, csv;
        for (const auto& t : out.tables) {
          py::dict d;
          d["columns"] = t.columns;
          d["rows"] = t.rows;
          tables[py::str(t.name)] = d;
          csv[py::str(t.name)] = cli::render_table(t, sub, cfg, out.pass);
        }
        py::dict r;
        r["pass"] = out.pass;
        r["report"] = out.report;
        r["tables"] = tables;
        r["csv"] = csv;
        r["config_hash"] = cli::config_hash(cfg);
        return r;
      },
      py::arg("subcommand"), py::arg("config"), py::arg("seed") = py::none(),
      py::arg("override_validation") = false);
}
