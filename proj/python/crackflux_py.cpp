#include "crackflux/charts.hpp"
#include "crackflux/fields.hpp"
#include "crackflux/material.hpp"
#include "crackflux/quad.hpp"
#include "crackflux/report.hpp"
#include "crackflux/scenario.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace crackflux;

namespace {

// Reports cross the boundary as JSON and come out as plain dicts.
py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_crackflux, m) {
    m.doc() = "Bindings of the crackflux core library";
    m.attr("__version__") = kVersion;

    // Translators run newest first: the base class goes first.
    py::register_exception<Error>(m, "CrackfluxError", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<Scenario>(m, "Scenario")
        .def_static("load", &load_scenario, py::arg("path"))
        .def_static(
            "parse",
            [](const std::string& text) {
                std::istringstream is(text);
                return parse_scenario(is, "<string>");
            },
            py::arg("text"))
        .def_readonly("name", &Scenario::name)
        .def_property_readonly("T", [](const Scenario& s) { return s.problem->T(); })
        .def_property_readonly("entries", [](const Scenario& s) { return s.entries; })
        .def(
            "tip",
            [](const Scenario& s, double t) {
                const Vec2 p = s.problem->tip(t);
                return std::make_pair(p.x(), p.y());
            },
            py::arg("t"))
        .def(
            "a_factor",
            [](const Scenario& s, double t) {
                const Problem& p = *s.problem;
                return a_factor(t, *p.path, p.law, *p.A);
            },
            py::arg("t"))
        .def(
            "a_factor_chart",
            [](const Scenario& s, double t) {
                const Problem& p = *s.problem;
                return a_factor_chart(t, *p.path, p.law, *p.A);
            },
            py::arg("t"))
        .def(
            "validate",
            [](const Scenario& s) {
                ValidationOptions o;
                o.min_tip_distance = s.min_tip_distance;
                return to_py(to_json(validate_scenario(*s.problem, o)));
            })
        .def(
            "ellipticity_audit",
            [](const Scenario& s, int nt, int nx, int ny) {
                const Pipeline pl(s.problem, s.charts);
                return to_py(to_json(ellipticity_audit(pl, nt, nx, ny)));
            },
            py::arg("nt") = 5, py::arg("nx") = 20, py::arg("ny") = 20)
        .def(
            "tip_flux",
            [](const Scenario& s, double t, double k, std::vector<double> eps) {
                const TipFluxSetup setup{s.problem, KLaw::constant(k), 0.5, s.problem->T()};
                return to_py(to_json(tip_flux_limit(setup, t, eps)));
            },
            py::arg("t"), py::arg("k"), py::arg("eps_seq") = std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4});

    m.def(
        "fondlem_audit",
        [](std::vector<double> eps) {
            return to_py(to_json(
                fondlem_audit([](const Vec2&) { return 1.0; }, 1, [](double) { return 0.0; }, -1, 1, eps)));
        },
        py::arg("eps_seq") = std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4},
        "Half-plane limit for g = 1 on [-1, 1] x (0, eps).");

    m.def(
        "singular_field",
        [](double y1, double y2) {
            const SJet s = S_eval(Vec2(y1, y2));
            return py::make_tuple(s.v, py::make_tuple(s.g.x(), s.g.y()));
        },
        py::arg("y1"), py::arg("y2"), "S(y) = Im sqrt(y1 + i y2) and its gradient.");
}
