#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dncs/block_matrix.hpp"
#include "dncs/coupled_riccati.hpp"
#include "dncs/mjls.hpp"
#include "dncs/riccati_operators.hpp"
#include "dncs/simulation.hpp"
#include "dncs/system_spec.hpp"
#include "dncs/thresholds.hpp"

namespace py = pybind11;

using namespace dncs;

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Optimal decentralized control of networked systems with unreliable "
      "uplinks: coupled Riccati solvers, critical drop-probability "
      "thresholds, auxiliary-MJLS stability tests and closed-loop simulation";

  py::enum_<SolveStatus>(m, "SolveStatus")
      .value("converged", SolveStatus::kConverged)
      .value("diverged", SolveStatus::kDiverged)
      .value("iteration_limit", SolveStatus::kIterationLimit);

  py::enum_<NoiseKind>(m, "NoiseKind")
      .value("standard_normal", NoiseKind::kStandardNormal)
      .value("rademacher", NoiseKind::kRademacher)
      .value("zero", NoiseKind::kZero);

  py::class_<DncsSpec>(m, "DncsSpec")
      .def(py::init<>())
      .def_readwrite("state_dims", &DncsSpec::state_dims)
      .def_readwrite("remote_input_dim", &DncsSpec::remote_input_dim)
      .def_readwrite("local_input_dims", &DncsSpec::local_input_dims)
      .def_readwrite("a_blocks", &DncsSpec::a_blocks)
      .def_readwrite("b_local", &DncsSpec::b_local)
      .def_readwrite("b_remote", &DncsSpec::b_remote)
      .def_readwrite("q", &DncsSpec::q)
      .def_readwrite("r", &DncsSpec::r)
      .def_readwrite("drop_probs", &DncsSpec::drop_probs)
      .def("subsystems", &DncsSpec::subsystems)
      .def("state_dim", &DncsSpec::state_dim)
      .def("input_dim", &DncsSpec::input_dim)
      .def("validate", &DncsSpec::validate);

  m.def("two_controller_spec", &two_controller_spec, py::arg("a"),
        py::arg("b10"), py::arg("b11"), py::arg("q"), py::arg("r"),
        py::arg("p1"));

  // Riccati operators over plain matrices.
  m.def("omega", &omega, py::arg("p"), py::arg("q"), py::arg("r"),
        py::arg("a"), py::arg("b"));
  m.def("psi", &psi, py::arg("p"), py::arg("r"), py::arg("a"), py::arg("b"));
  m.def("phi", &phi, py::arg("p"), py::arg("k"), py::arg("q"), py::arg("r"),
        py::arg("a"), py::arg("b"));
  m.def("spectral_radius", &spectral_radius, py::arg("m"),
        py::arg("tol") = 1e-9);
  m.def("kron", &kron, py::arg("a"), py::arg("b"));
  m.def("sqrt_psd", &sqrt_psd, py::arg("q"));

  py::class_<ThresholdReport>(m, "ThresholdReport")
      .def_readonly("p_s", &ThresholdReport::p_s)
      .def_readonly("p_d", &ThresholdReport::p_d)
      .def_readonly("p_c", &ThresholdReport::p_c)
      .def_readonly("p_c_effective", &ThresholdReport::p_c_effective)
      .def_readonly("uncontrollable", &ThresholdReport::uncontrollable)
      .def_readonly("q_detectable", &ThresholdReport::q_detectable)
      .def_readonly("b_stabilizable", &ThresholdReport::b_stabilizable)
      .def_readonly("local_q_detectable", &ThresholdReport::local_q_detectable)
      .def("assumption3", &ThresholdReport::assumption3);

  py::class_<FeasibilityVerdict>(m, "FeasibilityVerdict")
      .def_readonly("feasible", &FeasibilityVerdict::feasible)
      .def_readonly("binding", &FeasibilityVerdict::binding);

  m.def("uncontrollable_modes", &uncontrollable_modes, py::arg("a"),
        py::arg("b"), py::arg("rank_tol") = 1e-8);
  m.def("min_achievable_radius", &min_achievable_radius, py::arg("a"),
        py::arg("b"), py::arg("rank_tol") = 1e-8);
  m.def("is_stabilizable", &is_stabilizable, py::arg("a"), py::arg("b"),
        py::arg("rank_tol") = 1e-8);
  m.def("is_detectable", &is_detectable, py::arg("a"), py::arg("c"),
        py::arg("rank_tol") = 1e-8);
  m.def("critical_probs", &critical_probs, py::arg("spec"),
        py::arg("rank_tol") = 1e-8);
  m.def("feasibility_verdict", &feasibility_verdict, py::arg("spec"),
        py::arg("rank_tol") = 1e-8);

  py::class_<FiniteSolution>(m, "FiniteSolution")
      .def_readonly("horizon", &FiniteSolution::horizon)
      .def_readonly("p0", &FiniteSolution::p0)
      .def_readonly("pn", &FiniteSolution::pn)
      .def_readonly("k0", &FiniteSolution::k0)
      .def_readonly("kn", &FiniteSolution::kn)
      .def_readonly("cost", &FiniteSolution::cost);

  py::class_<SteadySolution>(m, "SteadySolution")
      .def(py::init<>())
      .def_readonly("p0", &SteadySolution::p0)
      .def_readonly("pn", &SteadySolution::pn)
      .def_readonly("k0", &SteadySolution::k0)
      .def_readonly("kn", &SteadySolution::kn)
      .def_readonly("lambda_", &SteadySolution::lambda)
      .def_readonly("avg_cost", &SteadySolution::avg_cost)
      .def_readonly("status", &SteadySolution::status)
      .def_readonly("iterations", &SteadySolution::iterations)
      .def_readonly("warnings", &SteadySolution::warnings)
      .def("converged", &SteadySolution::converged);

  m.def("finite_horizon_solve", &finite_horizon_solve, py::arg("spec"),
        py::arg("horizon"));
  m.def("steady_solve", &steady_solve, py::arg("spec"),
        py::arg("tol") = 1e-10, py::arg("max_iter") = 100000,
        py::arg("divergence_cap") = 1e12);
  m.def("two_controller_solve", &two_controller_solve, py::arg("a"),
        py::arg("b10"), py::arg("b11"), py::arg("q"), py::arg("r"),
        py::arg("p1"), py::arg("tol") = 1e-10, py::arg("max_iter") = 100000,
        py::arg("divergence_cap") = 1e12);

  py::class_<BarRepresentation>(m, "BarRepresentation")
      .def_readonly("horizon", &BarRepresentation::horizon)
      .def_readonly("p0", &BarRepresentation::p0)
      .def_readonly("pn", &BarRepresentation::pn);
  m.def("bar_representation", &bar_representation, py::arg("spec"),
        py::arg("horizon"));

  py::class_<MjlsModel>(m, "MjlsModel")
      .def(py::init<>())
      .def_readwrite("a", &MjlsModel::a)
      .def_readwrite("b", &MjlsModel::b)
      .def_readwrite("q", &MjlsModel::q)
      .def_readwrite("r", &MjlsModel::r)
      .def_readwrite("theta", &MjlsModel::theta)
      .def("modes", &MjlsModel::modes)
      .def("validate", &MjlsModel::validate);

  m.def("build_auxiliary_2c", &build_auxiliary_2c, py::arg("a"),
        py::arg("b10"), py::arg("b11"), py::arg("q"), py::arg("r"),
        py::arg("p1"));
  m.def("build_auxiliary_nc", &build_auxiliary_nc, py::arg("spec"));

  py::class_<MjlsRecursions>(m, "MjlsRecursions")
      .def_readonly("horizon", &MjlsRecursions::horizon)
      .def_readonly("p", &MjlsRecursions::p)
      .def_readonly("k", &MjlsRecursions::k);
  m.def("mjls_finite_recursions", &mjls_finite_recursions, py::arg("model"),
        py::arg("horizon"));

  py::class_<DcareSolution>(m, "DcareSolution")
      .def_readonly("p", &DcareSolution::p)
      .def_readonly("k", &DcareSolution::k)
      .def_readonly("status", &DcareSolution::status)
      .def_readonly("iterations", &DcareSolution::iterations)
      .def("converged", &DcareSolution::converged);
  m.def("dcare_solve", &dcare_solve, py::arg("model"), py::arg("tol") = 1e-10,
        py::arg("max_iter") = 100000, py::arg("divergence_cap") = 1e12);

  py::class_<StabilityReport>(m, "StabilityReport")
      .def_readonly("schur_stable", &StabilityReport::schur_stable)
      .def_readonly("rho", &StabilityReport::rho)
      .def_readonly("matrix_dim", &StabilityReport::matrix_dim);
  py::class_<ShortcutReport>(m, "ShortcutReport")
      .def_readonly("block_radii", &ShortcutReport::block_radii)
      .def_readonly("schur_stable", &ShortcutReport::schur_stable);

  m.def("second_moment_matrix", &second_moment_matrix, py::arg("theta"),
        py::arg("m"));
  m.def("ss_test", &ss_test, py::arg("model"), py::arg("gains"));
  m.def("sd_test", &sd_test, py::arg("model"), py::arg("injections"));
  m.def("triangular_shortcut", &triangular_shortcut, py::arg("model"),
        py::arg("closed_loop"));
  m.def("injection_search", &injection_search, py::arg("model"),
        py::arg("restarts") = 40, py::arg("seed") = 12345);

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("spec", &SimConfig::spec)
      .def_readwrite("solution", &SimConfig::solution)
      .def_readwrite("horizon", &SimConfig::horizon)
      .def_readwrite("num_runs", &SimConfig::num_runs)
      .def_readwrite("seed", &SimConfig::seed)
      .def_readwrite("noise", &SimConfig::noise)
      .def_readwrite("record_every", &SimConfig::record_every);

  py::class_<SimReport>(m, "SimReport")
      .def_readonly("mean_avg_cost", &SimReport::mean_avg_cost)
      .def_readonly("std_error", &SimReport::std_error)
      .def_readonly("predicted_avg_cost", &SimReport::predicted_avg_cost)
      .def_readonly("max_mean_sq_state", &SimReport::max_mean_sq_state)
      .def_readonly("max_mean_sq_error", &SimReport::max_mean_sq_error)
      .def_readonly("mean_sq_state", &SimReport::mean_sq_state)
      .def_readonly("mean_sq_error", &SimReport::mean_sq_error)
      .def_readonly("run_avg_cost", &SimReport::run_avg_cost)
      .def_readonly("aborted_runs", &SimReport::aborted_runs)
      .def_readonly("horizon", &SimReport::horizon)
      .def_readonly("num_runs", &SimReport::num_runs)
      .def_readonly("seed", &SimReport::seed)
      .def_readonly("noise", &SimReport::noise)
      .def_readonly("generator", &SimReport::generator);

  m.def(
      "run_monte_carlo",
      [](const SimConfig& config) { return run_monte_carlo(config, nullptr); },
      py::arg("config"));

  py::class_<IdentityCheck>(m, "IdentityCheck")
      .def_readonly("lhs", &IdentityCheck::lhs)
      .def_readonly("rhs", &IdentityCheck::rhs)
      .def_readonly("residual", &IdentityCheck::residual)
      .def_readonly("pass_", &IdentityCheck::pass);
  m.def("verify_step_identity", &verify_step_identity, py::arg("spec"),
        py::arg("solution"), py::arg("x_hat"), py::arg("sigma"),
        py::arg("tol") = 1e-8);

  py::class_<FiniteCostCheck>(m, "FiniteCostCheck")
      .def_readonly("dp_cost", &FiniteCostCheck::dp_cost)
      .def_readonly("mc_cost", &FiniteCostCheck::mc_cost)
      .def_readonly("std_error", &FiniteCostCheck::std_error)
      .def_readonly("z_score", &FiniteCostCheck::z_score);
  m.def("finite_horizon_cost_check", &finite_horizon_cost_check,
        py::arg("spec"), py::arg("horizon"), py::arg("num_runs"),
        py::arg("seed"), py::arg("noise") = NoiseKind::kStandardNormal);
}
