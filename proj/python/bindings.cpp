#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "barrier_solver/closed_form.hpp"
#include "barrier_solver/exppoly.hpp"
#include "barrier_solver/io.hpp"
#include "barrier_solver/model.hpp"
#include "barrier_solver/recursion.hpp"
#include "barrier_solver/simulator.hpp"

namespace py = pybind11;
using namespace barrier_solver;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Barrier strategies for capital injection under a two-state interest rate";

    static py::exception<Error> error(m, "SolverError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = error;
            py::object inst = exc(std::string(to_string(e.code())) + ": " + e.what());
            inst.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(error.ptr(), inst.ptr());
        }
    });

    py::enum_<RateState>(m, "RateState").value("Low", RateState::Low).value("High", RateState::High);
    py::enum_<ValidationMode>(m, "ValidationMode")
        .value("Strict", ValidationMode::Strict)
        .value("Relaxed", ValidationMode::Relaxed);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](double mu, double sigma, double delta1, double delta2, double lambda1, double lambda2,
                         ValidationMode mode) {
                 return ModelParams{mu, sigma, delta1, delta2, lambda1, lambda2, mode};
             }),
             py::arg("mu"), py::arg("sigma"), py::arg("delta1"), py::arg("delta2"), py::arg("lambda1"),
             py::arg("lambda2"), py::arg("mode") = ValidationMode::Strict)
        .def_readwrite("mu", &ModelParams::mu)
        .def_readwrite("sigma", &ModelParams::sigma)
        .def_readwrite("delta1", &ModelParams::delta1)
        .def_readwrite("delta2", &ModelParams::delta2)
        .def_readwrite("lambda1", &ModelParams::lambda1)
        .def_readwrite("lambda2", &ModelParams::lambda2)
        .def_readwrite("mode", &ModelParams::mode)
        .def("__repr__", [](const ModelParams& p) { return "ModelParams(" + to_json(p).dump() + ")"; });

    m.def("validate", [](const ModelParams& p) -> std::optional<std::string> {
        if (auto e = validate(p)) return std::string(e->what());
        return std::nullopt;
    });
    m.def("expected_discount", &expected_discount, py::arg("params"), py::arg("eta0"), py::arg("t"));

    py::class_<PiecewiseExpPoly>(m, "PiecewiseExpPoly")
        .def("__call__", [](const PiecewiseExpPoly& f, double x, int order) { return f.eval(x, order); },
             py::arg("x"), py::arg("order") = 0)
        .def_property_readonly("breakpoints", &PiecewiseExpPoly::breakpoints)
        .def("to_json", [](const PiecewiseExpPoly& f) { return to_json(f).dump(); })
        .def_static("from_json", [](const std::string& s) { return function_from_json(json::parse(s)); });

    py::class_<V0Result>(m, "V0Result")
        .def_readonly("v_low", &V0Result::v_low)
        .def_readonly("v_high", &V0Result::v_high)
        .def_readonly("d2_low_at_0", &V0Result::d2_low_at_0)
        .def_readonly("d2_high_at_0", &V0Result::d2_high_at_0)
        .def_readonly("optimal", &V0Result::optimal);
    m.def("v0", [](const ModelParams& p) { return v0(p); });
    m.def("example_barrier_lambda2_zero", &example_barrier_lambda2_zero);

    py::class_<Solution>(m, "Solution")
        .def_readonly("v_low", &Solution::v_low)
        .def_readonly("v_high", &Solution::v_high)
        .def_readonly("barrier", &Solution::barrier)
        .def_readonly("iterations", &Solution::iterations)
        .def_property_readonly("hjb_passed", [](const Solution& s) { return s.residual_report.passed; })
        .def_property_readonly("hjb_max_violation",
                               [](const Solution& s) { return s.residual_report.max_violation; });
    m.def(
        "solve",
        [](const ModelParams& p, double tol, int max_iter) {
            RecursionOptions o;
            o.tol = tol;
            o.max_iter = max_iter;
            return solve(p, o);
        },
        py::arg("params"), py::arg("tol") = 1e-9, py::arg("max_iter") = 200);

    py::class_<BarrierStrategy>(m, "BarrierStrategy")
        .def(py::init([](double lo, double hi) { return BarrierStrategy{lo, hi}; }), py::arg("barrier_low"),
             py::arg("barrier_high") = 0.0)
        .def_readwrite("barrier_low", &BarrierStrategy::barrier_low)
        .def_readwrite("barrier_high", &BarrierStrategy::barrier_high);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("x0", &SimConfig::x0)
        .def_readwrite("eta0", &SimConfig::eta0)
        .def_readwrite("dt", &SimConfig::dt)
        .def_readwrite("horizon", &SimConfig::horizon)
        .def_readwrite("n_paths", &SimConfig::n_paths)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("antithetic", &SimConfig::antithetic)
        .def_readwrite("truncation_tol", &SimConfig::truncation_tol)
        .def_readwrite("threads", &SimConfig::threads);

    py::class_<SimEstimate>(m, "SimEstimate")
        .def_readonly("mean", &SimEstimate::mean)
        .def_readonly("stderr", &SimEstimate::std_error)
        .def_readonly("n_paths", &SimEstimate::n_paths)
        .def_readonly("truncation_bound", &SimEstimate::truncation_bound)
        .def_readonly("dt", &SimEstimate::dt)
        .def_readonly("horizon", &SimEstimate::horizon);

    m.def("simulate_value", &simulate_value, py::arg("params"), py::arg("strategy"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("simulate_discount", &simulate_discount, py::arg("params"), py::arg("eta0"), py::arg("t"),
          py::arg("config"), py::call_guard<py::gil_scoped_release>());
}
