// Python bindings for the solver core.
#include "fuelopt/bounds.hpp"
#include "fuelopt/config.hpp"
#include "fuelopt/mc.hpp"
#include "fuelopt/strategy.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace fuelopt;

PYBIND11_MODULE(_core, m) {
    m.doc() = "fuel-constrained optimal execution via log-Laplace value fields";

    py::register_exception<InvalidSpec>(m, "InvalidSpec", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<double, double, int>(), py::arg("t0"), py::arg("horizon"),
             py::arg("n_steps"))
        .def_readonly("t0", &TimeGrid::t0)
        .def_readonly("horizon", &TimeGrid::horizon)
        .def_readonly("n_steps", &TimeGrid::n_steps)
        .def("dt", &TimeGrid::dt)
        .def("node", &TimeGrid::node)
        .def("remaining", &TimeGrid::remaining);

    py::class_<StateGrid>(m, "StateGrid")
        .def(py::init<std::vector<double>>(), py::arg("labels"))
        .def_static("single", &StateGrid::single)
        .def_static("indexed", &StateGrid::indexed)
        .def_static("uniform", &StateGrid::uniform)
        .def_readonly("labels", &StateGrid::labels)
        .def("size", &StateGrid::size);

    py::enum_<Boundary>(m, "Boundary")
        .value("reflect", Boundary::Reflect)
        .value("absorb", Boundary::Absorb);

    py::class_<MarkovModel>(m, "MarkovModel")
        .def(py::init<TimeGrid, StateGrid, Mat>(), py::arg("time_grid"),
             py::arg("state_grid"), py::arg("kernel"))
        .def(py::init<TimeGrid, StateGrid, std::vector<Mat>>(), py::arg("time_grid"),
             py::arg("state_grid"), py::arg("kernels"))
        .def_property_readonly("time_grid", &MarkovModel::time_grid)
        .def_property_readonly("state_grid", &MarkovModel::state_grid)
        .def("n_states", &MarkovModel::n_states)
        .def("n_steps", &MarkovModel::n_steps)
        .def("kernel", &MarkovModel::kernel, py::arg("step"));

    m.def("semigroup_expect", &semigroup_expect, py::arg("model"), py::arg("j_from"),
          py::arg("j_to"), py::arg("f"));
    m.def("build_one_state", &build_one_state);
    m.def("build_two_state", &build_two_state, py::arg("rate_up"), py::arg("rate_down"),
          py::arg("time_grid"));
    m.def("build_random_walk", &build_random_walk, py::arg("volatility"),
          py::arg("state_grid"), py::arg("time_grid"), py::arg("boundary"));

    py::class_<Atom>(m, "Atom")
        .def_readonly("step", &Atom::step)
        .def_readonly("values", &Atom::values);

    py::class_<AdditiveFunctional>(m, "AdditiveFunctional")
        .def_static("zero", &AdditiveFunctional::zero, py::arg("n_steps"), py::arg("m"))
        .def_static("constant_density", &AdditiveFunctional::constant_density,
                    py::arg("level"), py::arg("n_steps"), py::arg("m"))
        .def_readwrite("density", &AdditiveFunctional::density)
        .def_readonly("atoms", &AdditiveFunctional::atoms)
        .def("add_atom", &AdditiveFunctional::add_atom, py::arg("step"), py::arg("values"));

    py::enum_<TerminalKind>(m, "TerminalKind")
        .value("penalty_k", TerminalKind::PenaltyK)
        .value("penalty_rho", TerminalKind::PenaltyRho)
        .value("singular", TerminalKind::Singular);

    py::class_<TerminalCondition>(m, "TerminalCondition")
        .def_static("penalty_k", &TerminalCondition::penalty_k, py::arg("k"))
        .def_static("penalty_rho", &TerminalCondition::penalty_rho, py::arg("rho"))
        .def_static("singular", &TerminalCondition::singular)
        .def_readonly("kind", &TerminalCondition::kind)
        .def_readonly("k", &TerminalCondition::k)
        .def_readonly("rho", &TerminalCondition::rho)
        .def("rho_eta_ratio", &TerminalCondition::rho_eta_ratio, py::arg("eta"));

    py::class_<DiscreteMeasure>(m, "DiscreteMeasure")
        .def(py::init<>())
        .def_readwrite("density", &DiscreteMeasure::density)
        .def_readwrite("atoms", &DiscreteMeasure::atoms)
        .def("tail_mass", &DiscreteMeasure::tail_mass, py::arg("j"), py::arg("dt"));

    py::class_<ProblemSpec>(m, "ProblemSpec")
        .def(py::init<MarkovModel, double, Vec, AdditiveFunctional, TerminalCondition,
                      double, int, double>(),
             py::arg("model"), py::arg("p"), py::arg("eta"), py::arg("functional"),
             py::arg("terminal"), py::arg("x0"), py::arg("z0"), py::arg("gamma") = -1.0)
        .def_readonly("model", &ProblemSpec::model)
        .def_readonly("p", &ProblemSpec::p)
        .def_readonly("beta", &ProblemSpec::beta)
        .def_readonly("gamma", &ProblemSpec::gamma)
        .def_readonly("eta", &ProblemSpec::eta)
        .def_readonly("functional", &ProblemSpec::functional)
        .def_readonly("terminal", &ProblemSpec::terminal)
        .def_readonly("x0", &ProblemSpec::x0)
        .def_readonly("z0", &ProblemSpec::z0);

    m.def("expected_A_tail", &expected_A_tail, py::arg("spec"), py::arg("j"), py::arg("z"));
    m.def("expected_A_tail_field", &expected_A_tail_field, py::arg("spec"));

    py::class_<ValueField>(m, "ValueField")
        .def_readonly("values", &ValueField::values)
        .def_readonly("terminal", &ValueField::terminal)
        .def_readonly("gamma", &ValueField::gamma)
        .def_readonly("beta", &ValueField::beta)
        .def("at", &ValueField::at, py::arg("j"), py::arg("z"));

    py::class_<SingularDiagnostics>(m, "SingularDiagnostics")
        .def(py::init<>())
        .def_readonly("k_used", &SingularDiagnostics::k_used)
        .def_readonly("guarded_diffs", &SingularDiagnostics::guarded_diffs)
        .def_readonly("monotonicity_violations",
                      &SingularDiagnostics::monotonicity_violations)
        .def_readonly("saturation_rel", &SingularDiagnostics::saturation_rel)
        .def_readonly("cross_check_rel", &SingularDiagnostics::cross_check_rel)
        .def_readonly("converged_by_tol", &SingularDiagnostics::converged_by_tol);

    m.def("solve_backward", &solve_backward, py::arg("spec"));
    m.def(
        "solve_singular",
        [](const ProblemSpec& spec, std::vector<double> k_schedule, double tol_k,
           double tol_singular, int guard_steps) {
            SingularOptions opts;
            opts.k_schedule = std::move(k_schedule);
            opts.tol_k = tol_k;
            opts.tol_singular = tol_singular;
            opts.guard_steps = guard_steps;
            SingularDiagnostics diag;
            ValueField field = solve_singular(spec, opts, &diag);
            return py::make_tuple(field, diag);
        },
        py::arg("spec"), py::arg("k_schedule") = std::vector<double>{},
        py::arg("tol_k") = 1e-8, py::arg("tol_singular") = 1e-3, py::arg("guard_steps") = 5);
    m.def("default_k_schedule", &default_k_schedule);
    m.def("closed_form_total_mass", &closed_form_total_mass, py::arg("lam"),
          py::arg("gamma"), py::arg("beta"), py::arg("elapsed"));
    m.def("sink_flow", &sink_flow, py::arg("y"), py::arg("dt"), py::arg("gamma"),
          py::arg("beta"), py::arg("eta"));

    py::class_<ResidualReport>(m, "ResidualReport")
        .def_readonly("max_abs", &ResidualReport::max_abs)
        .def_readonly("step", &ResidualReport::step)
        .def_readonly("state", &ResidualReport::state);
    m.def("check_integral_residual", &check_integral_residual, py::arg("field"),
          py::arg("spec"));

    py::class_<HField>(m, "HField")
        .def_readonly("h", &HField::h)
        .def_readonly("c_T", &HField::c_T)
        .def_readonly("c_rT", &HField::c_rT)
        .def_readonly("cbar_rT", &HField::cbar_rT)
        .def_readonly("C_rT", &HField::C_rT);
    m.def("compute_h", &compute_h, py::arg("model"), py::arg("eta"));
    m.def("nonlinear_semigroup", &nonlinear_semigroup, py::arg("y"), py::arg("t"),
          py::arg("gamma"), py::arg("beta"));
    m.def("upper_bound_k", &upper_bound_k, py::arg("ea_tail"), py::arg("k"), py::arg("gamma"),
          py::arg("beta"), py::arg("remaining"));
    m.def("upper_bound_singular", &upper_bound_singular, py::arg("ea_tail"), py::arg("gamma"),
          py::arg("beta"), py::arg("remaining"));
    m.def("upper_bound_eta", &upper_bound_eta, py::arg("ea_tail"), py::arg("h_rz"),
          py::arg("k"), py::arg("c_T"), py::arg("beta"), py::arg("remaining"));
    m.def("lower_bound_extinction", &lower_bound_extinction, py::arg("h_rz"), py::arg("c_rT"),
          py::arg("beta"), py::arg("remaining"));
    m.def("gronwall_bound", &gronwall_bound, py::arg("a_fn"), py::arg("k"), py::arg("gamma"),
          py::arg("beta"), py::arg("time_grid"));
    m.def("alpha_measure", &alpha_measure, py::arg("spec"), py::arg("j_anchor"),
          py::arg("z_anchor"));

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("path", &Trajectory::path)
        .def_readonly("x", &Trajectory::x)
        .def_readonly("xdot", &Trajectory::xdot);
    py::class_<CostBreakdown>(m, "CostBreakdown")
        .def_readonly("impact", &CostBreakdown::impact)
        .def_readonly("risk", &CostBreakdown::risk)
        .def_readonly("terminal", &CostBreakdown::terminal)
        .def("total", &CostBreakdown::total);
    m.def("feedback_strategy", &feedback_strategy, py::arg("field"), py::arg("spec"),
          py::arg("path"));
    m.def("feedback_strategy_perturbed", &feedback_strategy_perturbed, py::arg("field"),
          py::arg("spec"), py::arg("path"), py::arg("rate_mult"));
    m.def("twap_trajectory", &twap_trajectory, py::arg("spec"), py::arg("path"));
    m.def("power_trajectory", &power_trajectory, py::arg("spec"), py::arg("path"),
          py::arg("alpha"));
    m.def("cost", &cost, py::arg("trajectory"), py::arg("spec"));
    m.def("phi_p", &phi_p, py::arg("xi"), py::arg("zeta"), py::arg("p"));
    m.def("verification_gap", &verification_gap, py::arg("trajectory"), py::arg("field"),
          py::arg("spec"));
    m.def("linear_bound_check", &linear_bound_check, py::arg("trajectory"), py::arg("x0"),
          py::arg("T"));

    py::class_<SeededRun>(m, "SeededRun")
        .def(py::init([](std::uint64_t seed, int n_paths, int threads) {
                 return SeededRun{seed, n_paths, threads};
             }),
             py::arg("master_seed"), py::arg("n_paths"), py::arg("threads") = 1)
        .def_readwrite("master_seed", &SeededRun::master_seed)
        .def_readwrite("n_paths", &SeededRun::n_paths)
        .def_readwrite("threads", &SeededRun::threads);
    py::class_<McEstimate>(m, "McEstimate")
        .def_readonly("mean", &McEstimate::mean)
        .def_readonly("se", &McEstimate::se)
        .def_readonly("n", &McEstimate::n);
    m.def("simulate_paths", &simulate_paths, py::arg("model"), py::arg("run"), py::arg("z0"));
    m.def("estimate_strategy_cost", &estimate_strategy_cost, py::arg("spec"),
          py::arg("field"), py::arg("run"));
    m.def("simulate_feller_mass", &simulate_feller_mass, py::arg("gamma"), py::arg("m0"),
          py::arg("grid"), py::arg("run"));
    m.def("estimate_extinction", &estimate_extinction, py::arg("gamma"), py::arg("m0"),
          py::arg("grid"), py::arg("run"));
    m.def("estimate_j_functional_laplace", &estimate_j_functional_laplace, py::arg("gamma"),
          py::arg("m0"), py::arg("nu"), py::arg("grid"), py::arg("run"));

    py::class_<Config>(m, "Config").def(py::self == py::self);
    m.def("parse_config", &parse_config, py::arg("text"));
    m.def("load_config", &load_config, py::arg("path"));
    m.def("serialize_config", &serialize_config, py::arg("config"));
    m.def("build_problem", &build_problem, py::arg("config"));
}
