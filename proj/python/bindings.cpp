#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "blochkit/catalog.hpp"
#include "blochkit/errors.hpp"
#include "blochkit/fixtures.hpp"
#include "blochkit/io.hpp"
#include "blochkit/multidim.hpp"
#include "blochkit/spectrum.hpp"
#include "blochkit/transform.hpp"

namespace py = pybind11;
using namespace blochkit;

namespace {

FloquetOptions floquet_options(double rtol, double atol, double tau_eig, double tau_scalar, int grid) {
    FloquetOptions o;
    o.propagation.rtol = rtol;
    o.propagation.atol = atol;
    o.tau_eig = tau_eig;
    o.tau_scalar = tau_scalar;
    o.grid_points = grid;
    return o;
}

PeriodicCoefficient coefficient_from_text(const std::string& text) {
    return io::coefficient_from_json(io::json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Floquet-Bloch analysis of periodic second-order ODEs.";

    static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InvalidArgument& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const io::json::exception& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const NumericalError& e) {
            py::set_error(numerical_error, e.what());
        }
    });

    py::enum_<Jordan>(m, "Jordan").value("J1", Jordan::J1).value("J2", Jordan::J2).value("J3", Jordan::J3);
    py::enum_<SigmaTag>(m, "SigmaTag").value("G1", SigmaTag::G1).value("G2", SigmaTag::G2).value("G3", SigmaTag::G3);
    py::enum_<EdgeKind>(m, "EdgeKind")
        .value("Periodic", EdgeKind::Periodic)
        .value("Antiperiodic", EdgeKind::Antiperiodic)
        .value("Truncated", EdgeKind::Truncated);

    py::class_<CongruenceClass>(m, "CongruenceClass")
        .def_readonly("representative", &CongruenceClass::representative)
        .def_readonly("modulus", &CongruenceClass::modulus)
        .def("__repr__", [](const CongruenceClass& k) {
            return "CongruenceClass(" + std::to_string(k.representative.real()) + "+" +
                   std::to_string(k.representative.imag()) + "i mod " + std::to_string(k.modulus) + ")";
        });
    m.def("reduce_quasimomentum", py::overload_cast<cplx, double>(&reduce_quasimomentum), py::arg("k"),
          py::arg("modulus"));
    m.def("class_equal", &class_equal, py::arg("a"), py::arg("b"), py::arg("rel_tol") = kClassTolerance);

    py::class_<PeriodicCoefficient>(m, "PeriodicCoefficient")
        .def_static("constant", &PeriodicCoefficient::constant, py::arg("period"), py::arg("value"))
        .def_static("fourier", &PeriodicCoefficient::fourier, py::arg("period"), py::arg("coefficients"),
                    "Coefficients c_{-M} .. c_M of sum c_m exp(2 pi i m x / period).")
        .def_static("from_json", &coefficient_from_text, py::arg("text"),
                    "Any coefficient in the problem-file schema.")
        .def_property_readonly("period", &PeriodicCoefficient::period)
        .def("__call__", &PeriodicCoefficient::evaluate, py::arg("x"))
        .def("mean", &PeriodicCoefficient::mean)
        .def("to_json", [](const PeriodicCoefficient& c) { return io::to_json(c).dump(); });

    py::class_<Problem1D>(m, "Problem1D")
        .def(py::init([](double period, const PeriodicCoefficient& W, const PeriodicCoefficient& V) {
                 return Problem1D(Lattice1D(period), W, V);
             }),
             py::arg("period"), py::arg("W"), py::arg("V"))
        .def(py::init([](double period, const PeriodicCoefficient& V) { return Problem1D(Lattice1D(period), V); }),
             py::arg("period"), py::arg("V"))
        .def_property_readonly("period", &Problem1D::period)
        .def_property_readonly("W", &Problem1D::W)
        .def_property_readonly("V", &Problem1D::V)
        .def_property_readonly("is_schroedinger", &Problem1D::is_schroedinger);

    auto cat = m.def_submodule("catalog", "Built-in problems.");
    cat.def("free_particle", &catalog::free_particle, py::arg("gamma") = kTwoPi);
    cat.def("constant_potential", &catalog::constant_potential, py::arg("v0") = 5.0, py::arg("gamma") = 1.0);
    cat.def("mathieu", &catalog::mathieu, py::arg("q") = 1.0);
    cat.def("kronig_penney", &catalog::kronig_penney, py::arg("v0") = 10.0, py::arg("width") = 0.3,
            py::arg("gamma") = 1.0);
    cat.def("intro_counterexample", &catalog::intro_counterexample);
    cat.def("constant_drift", &catalog::constant_drift, py::arg("c") = cplx(0.5), py::arg("gamma") = 1.0);
    cat.def("mathieu_potential", &catalog::mathieu_potential, py::arg("q") = 1.0);
    cat.def("names", [] {
        std::vector<std::string> out;
        for (const auto& e : catalog::builtin()) out.push_back(e.name);
        return out;
    });
    cat.def("find", [](const std::string& name) { return catalog::find(name).problem; }, py::arg("name"));

    py::class_<FloquetOptions>(m, "FloquetOptions")
        .def(py::init(&floquet_options), py::arg("rtol") = 1e-10, py::arg("atol") = 1e-12, py::arg("tau_eig") = 1e-7,
             py::arg("tau_scalar") = 1e-8, py::arg("grid") = 512)
        .def_property_readonly("rtol", [](const FloquetOptions& o) { return o.propagation.rtol; })
        .def_readonly("tau_eig", &FloquetOptions::tau_eig)
        .def_readonly("grid_points", &FloquetOptions::grid_points);

    py::class_<Monodromy>(m, "Monodromy")
        .def_readonly("M", &Monodromy::M)
        .def_readonly("lambda_", &Monodromy::lambda)
        .def_readonly("error_estimate", &Monodromy::error_estimate)
        .def_readonly("liouville_det", &Monodromy::liouville_det)
        .def_readonly("steps", &Monodromy::steps);
    m.def(
        "monodromy",
        [](const Problem1D& p, double lambda, double rtol, double atol) {
            PropagationOptions o;
            o.rtol = rtol;
            o.atol = atol;
            return monodromy(p, lambda, o);
        },
        py::arg("problem"), py::arg("lam"), py::arg("rtol") = 1e-10, py::arg("atol") = 1e-12);
    m.def("expm2", &expm2, py::arg("A"));

    py::class_<Classification>(m, "Classification")
        .def_property_readonly("monodromy", [](const Classification& c) { return c.data.monodromy; })
        .def_property_readonly("multipliers", [](const Classification& c) { return c.data.multipliers; })
        .def_property_readonly("jordan", [](const Classification& c) { return c.data.jordan; })
        .def_property_readonly("sigma_tag", [](const Classification& c) { return c.map.sigma_tag; })
        .def_property_readonly("classes", [](const Classification& c) { return c.map.classes; })
        .def_property_readonly("form_number",
                               [](const Classification& c) -> py::object {
                                   if (!c.form) return py::none();
                                   return py::int_(c.form->form_number());
                               })
        .def_property_readonly("bounded",
                               [](const Classification& c) -> py::object {
                                   if (!c.form) return py::none();
                                   return py::bool_(boundedness(*c.form));
                               })
        .def("to_json", [](const Classification& c) { return io::to_json(c).dump(); });
    m.def("classify", &classify, py::arg("problem"), py::arg("lam"), py::arg("options") = FloquetOptions{},
          py::arg("extract_form") = true);
    m.def(
        "residual",
        [](const Problem1D& p, double lambda, const Classification& c) {
            if (!c.form) throw InvalidArgument("classification was made without a form");
            return shifted_operator_residual(p, lambda, *c.form).max();
        },
        py::arg("problem"), py::arg("lam"), py::arg("classification"),
        "Largest shifted-operator residual of the extracted periodic parts.");

    m.def("discriminant", [](const Problem1D& p, double lambda) { return discriminant(p, lambda); },
          py::arg("problem"), py::arg("lam"));

    py::class_<Band>(m, "Band")
        .def_readonly("lo", &Band::lo)
        .def_readonly("hi", &Band::hi)
        .def_readonly("index", &Band::index)
        .def_readonly("lo_kind", &Band::lo_kind)
        .def_readonly("hi_kind", &Band::hi_kind);
    py::class_<BandStructure>(m, "BandStructure")
        .def_readonly("bands", &BandStructure::bands)
        .def("to_json", [](const BandStructure& b) { return io::to_json(b).dump(); })
        .def("to_csv", [](const BandStructure& b) { return io::bands_csv(b); });
    m.def(
        "locate_bands",
        [](const Problem1D& p, double lo, double hi, int coarse_n) { return locate_bands(p, lo, hi, coarse_n); },
        py::arg("problem"), py::arg("lambda_min"), py::arg("lambda_max"), py::arg("coarse_n") = 256);
    m.def(
        "planewave_fiber",
        [](const Problem1D& p, double k, int mpw) { return planewave_fiber(p, k, mpw).eigenvalues; },
        py::arg("problem"), py::arg("k"), py::arg("mpw") = 64);

    py::class_<UnionReport>(m, "UnionReport")
        .def_readonly("planewave_bands", &UnionReport::planewave_bands)
        .def_readonly("ode_bands", &UnionReport::ode_bands)
        .def_readonly("count_match", &UnionReport::count_match)
        .def_readonly("max_discrepancy", &UnionReport::max_discrepancy);
    m.def(
        "union_check",
        [](const Problem1D& p, int k_points, int mpw, double lambda_max) {
            return union_check(p, k_points, mpw, lambda_max);
        },
        py::arg("problem"), py::arg("k_points") = 201, py::arg("mpw") = 64, py::arg("lambda_max") = 25.0);

    py::class_<HartreeExample>(m, "HartreeExample")
        .def_property_readonly("energy", [](const HartreeExample& h) { return h.solution.energy; })
        .def_property_readonly("factor_energies", [](const HartreeExample& h) { return h.solution.factor_energies; })
        .def_property_readonly("bounded", [](const HartreeExample& h) { return h.solution.bounded; })
        .def("evaluate",
             [](const HartreeExample& h, const Eigen::MatrixXd& points) {
                 return evaluate(h.problem, h.solution, points);
             },
             py::arg("points"), "Psi at the columns of `points`.")
        .def(
            "residual",
            [](const HartreeExample& h, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int grid) {
                return residual_nd(h.problem, h.solution, grid, ProbeBox{lower, upper}).residual;
            },
            py::arg("lower"), py::arg("upper"), py::arg("grid") = 64)
        .def("term_count", [](const HartreeExample& h) { return combination_expand(h.problem, h.solution).size(); });
    m.def(
        "hartree_example",
        [](const std::vector<PeriodicCoefficient>& potentials, const std::vector<double>& lambdas) {
            return hartree_example(potentials, lambdas);
        },
        py::arg("potentials"), py::arg("lambdas"));

    py::class_<TransformField>(m, "TransformField")
        .def_readonly("values", &TransformField::values)
        .def_readonly("ks", &TransformField::ks)
        .def("properties",
             [](const TransformField& f) {
                 const auto p = check_properties(f);
                 return py::dict(py::arg("quasi_periodicity") = p.quasi_periodicity,
                                 py::arg("k_periodicity") = p.k_periodicity);
             })
        .def("inversion_error", [](const TransformField& f, int n) { return invert(f, n).max_error; },
             py::arg("quadrature_n"))
        .def("parseval_deviation", [](const TransformField& f) { return parseval(f).relative_deviation; });
    m.def(
        "bloch_floquet",
        [](const Eigen::MatrixXd& primitive, int points_per_cell, std::vector<int> cell_lo, std::vector<int> cell_hi,
           const std::function<cplx(const Eigen::VectorXd&)>& f, int k_per_dim, int shells) {
            const auto s = sample_function(LatticeND(primitive), points_per_cell, std::move(cell_lo),
                                           std::move(cell_hi), f);
            return bloch_floquet(s, k_per_dim, shells);
        },
        py::arg("primitive"), py::arg("points_per_cell"), py::arg("cell_lo"), py::arg("cell_hi"), py::arg("f"),
        py::arg("k_per_dim"), py::arg("shells"),
        "Samples f on the given cells of the lattice and returns its Bloch-Floquet transform.");

    m.def(
        "intro_fixture",
        [](int first_segment, int count) {
            const auto r = intro_fixture(first_segment, count);
            return py::dict(py::arg("segment_residuals") = r.segment_residuals,
                            py::arg("value_jumps") = r.value_jumps, py::arg("continuous") = r.continuous,
                            py::arg("multipliers") = r.classifier.data.multipliers,
                            py::arg("discrepancy") = r.discrepancy, py::arg("note") = r.note);
        },
        py::arg("first_segment") = 1, py::arg("count") = 4);
}
