#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "bellscope/cli.hpp"
#include "bellscope/dataset.hpp"
#include "bellscope/io.hpp"
#include "bellscope/linprog.hpp"
#include "bellscope/moment.hpp"
#include "bellscope/polytope.hpp"
#include "bellscope/quantum.hpp"
#include "bellscope/simulate.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace bellscope;

namespace {

ProbabilityTable table_from_text(const std::string& text) {
    std::istringstream in(text);
    return parse_correlation(in);
}

std::string table_to_text(const ProbabilityTable& p) {
    std::ostringstream out;
    write_correlation(out, p);
    return out.str();
}

py::tuple run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bell-scenario analysis for two parties with three ternary measurements each";
    m.attr("__version__") = kVersion;

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    py::enum_<Side>(m, "Side").value("Max", Side::Max).value("Min", Side::Min);
    py::enum_<Party>(m, "Party").value("Alice", Party::Alice).value("Bob", Party::Bob);
    py::enum_<Form>(m, "Form").value("CG", Form::CG).value("Full", Form::Full);
    py::enum_<MeasurementMode>(m, "MeasurementMode")
        .value("Povm", MeasurementMode::Povm)
        .value("Projective", MeasurementMode::Projective);
    py::enum_<MomentLevel>(m, "MomentLevel")
        .value("Npa1", MomentLevel::Npa1)
        .value("Npa1AB", MomentLevel::Npa1AB)
        .value("Npa2", MomentLevel::Npa2)
        .value("Local1", MomentLevel::Local1)
        .value("Local1PPT", MomentLevel::Local1PPT);
    m.def("parse_level", &parse_level, "name"_a);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<std::vector<int>, std::vector<int>>(), "outputs_a"_a, "outputs_b"_a)
        .def_static("flagship", &Scenario::flagship)
        .def_property_readonly("full_dimension", &Scenario::full_dimension)
        .def_property_readonly("cg_dimension", &Scenario::cg_dimension)
        .def_property_readonly("num_vertices", &Scenario::num_vertices)
        .def("full_index", &Scenario::full_index, "x"_a, "y"_a, "a"_a, "b"_a)
        .def("tag", &Scenario::tag)
        .def("__eq__", [](const Scenario& a, const Scenario& b) { return a == b; })
        .def("__repr__", [](const Scenario& s) { return "Scenario(" + s.tag() + ")"; });

    py::class_<ProbabilityTable>(m, "ProbabilityTable")
        .def(py::init<Scenario, std::vector<double>, double>(), "scenario"_a, "entries"_a, "tol"_a = 1e-9)
        .def_static("uniform", &ProbabilityTable::uniform, "scenario"_a = Scenario::flagship())
        .def_static("from_cg", &ProbabilityTable::from_cg, "scenario"_a, "g"_a, "tol"_a = 1e-9)
        .def_static("deterministic", &ProbabilityTable::deterministic, "scenario"_a, "out_a"_a, "out_b"_a)
        .def_static("from_text", &table_from_text, "text"_a)
        .def("to_text", &table_to_text)
        .def_property_readonly("scenario", &ProbabilityTable::scenario)
        .def_property_readonly("entries", &ProbabilityTable::entries)
        .def("cg", &ProbabilityTable::cg)
        .def("__call__", &ProbabilityTable::operator(), "x"_a, "y"_a, "a"_a, "b"_a);

    py::class_<CountsTable>(m, "CountsTable")
        .def(py::init<Scenario, std::vector<std::uint64_t>>(), "scenario"_a, "counts"_a)
        .def_property_readonly("counts", &CountsTable::counts)
        .def("total", &CountsTable::total, "x"_a, "y"_a);
    m.def("frequencies_from_counts", &frequencies_from_counts, "counts"_a);
    m.def("mix_with_white_noise", &mix_with_white_noise, "p"_a, "v"_a);

    py::class_<BellFunctional>(m, "BellFunctional")
        .def(py::init<>())
        .def_readwrite("scenario", &BellFunctional::scenario)
        .def_readwrite("form", &BellFunctional::form)
        .def_readwrite("coefficients", &BellFunctional::coefficients)
        .def_readwrite("offset", &BellFunctional::offset)
        .def_readwrite("local_max", &BellFunctional::local_max)
        .def_readwrite("local_min", &BellFunctional::local_min)
        .def("negated", &BellFunctional::negated);
    m.def("evaluate", &evaluate, "f"_a, "p"_a);
    m.def("full_from_cg", &full_from_cg, "f"_a);
    m.def("cg_from_full", &cg_from_full, "f"_a);

    py::class_<InequalityRecord>(m, "InequalityRecord")
        .def_readonly("index", &InequalityRecord::index)
        .def_readonly("functional", &InequalityRecord::functional)
        .def_readonly("reducible_scenario", &InequalityRecord::reducible_scenario)
        .def_readonly("quantum_min_is_local", &InequalityRecord::quantum_min_is_local)
        .def_readonly("reported_quantum_max", &InequalityRecord::reported_quantum_max)
        .def_readonly("reported_visibility_max", &InequalityRecord::reported_visibility_max)
        .def_readonly("reported_quantum_min", &InequalityRecord::reported_quantum_min)
        .def_readonly("reported_visibility_min", &InequalityRecord::reported_visibility_min)
        .def_readonly("reported_d_min", &InequalityRecord::reported_d_min);
    m.def("table1", &table1, py::return_value_policy::copy);
    m.def("table1_row", &table1_row, "n"_a, py::return_value_policy::copy);
    m.def("i3plus", &i3plus);

    py::class_<BoundResult>(m, "BoundResult")
        .def_readonly("value", &BoundResult::value)
        .def_readonly("saturating", &BoundResult::saturating)
        .def_readonly("exact", &BoundResult::exact);
    m.def("local_bound", &local_bound, "f"_a, "side"_a = Side::Max);

    py::class_<FaceAnalysis>(m, "FaceAnalysis")
        .def_readonly("bound", &FaceAnalysis::bound)
        .def_readonly("affine_dimension", &FaceAnalysis::affine_dimension)
        .def_readonly("spanned_dimension", &FaceAnalysis::spanned_dimension)
        .def_readonly("is_facet", &FaceAnalysis::is_facet)
        .def_property_readonly("num_saturating", [](const FaceAnalysis& f) { return f.saturating.size(); });
    m.def("face_analysis", &face_analysis, "f"_a, "side"_a = Side::Max);

    py::class_<VisibilityResult>(m, "VisibilityResult")
        .def_readonly("v_cr", &VisibilityResult::v_cr)
        .def_readonly("nonlocal_", &VisibilityResult::nonlocal)
        .def_readonly("certificate", &VisibilityResult::certificate)
        .def_readonly("certificate_value", &VisibilityResult::certificate_value);
    m.def("visibility_wrt_local_set", &visibility_wrt_local_set, "p"_a);
    m.def("visibility_wrt_inequality", &visibility_wrt_inequality, "p"_a, "f"_a);
    py::class_<FacetCertificate>(m, "FacetCertificate")
        .def_readonly("functional", &FacetCertificate::functional)
        .def_readonly("face", &FacetCertificate::face)
        .def_readonly("visibility", &FacetCertificate::visibility)
        .def_readonly("violation", &FacetCertificate::violation);
    m.def("facet_from_correlation", &facet_from_correlation, "p"_a);

    py::class_<SignalingReport>(m, "SignalingReport")
        .def_readonly("max_delta", &SignalingReport::max_delta)
        .def("max_z", &SignalingReport::max_z)
        .def("flags", &SignalingReport::flags, "k_sigma"_a = 2.0);
    m.def("signaling_deltas", py::overload_cast<const ProbabilityTable&>(&signaling_deltas), "p"_a);
    m.def("signaling_deltas", py::overload_cast<const CountsTable&>(&signaling_deltas), "counts"_a);
    m.def("check_nonsignaling", &check_nonsignaling, "p"_a, "tol"_a = 1e-9);

    // quantum
    py::class_<DensityMatrix>(m, "DensityMatrix")
        .def(py::init<int, int, CMat>(), "dim_a"_a, "dim_b"_a, "matrix"_a)
        .def_static("pure", &DensityMatrix::pure, "psi"_a, "dim_a"_a, "dim_b"_a)
        .def_readonly("dim_a", &DensityMatrix::dim_a)
        .def_readonly("dim_b", &DensityMatrix::dim_b)
        .def_readonly("matrix", &DensityMatrix::matrix);
    py::class_<Povm>(m, "Povm")
        .def(py::init<std::vector<CMat>>(), "elements"_a)
        .def_readonly("elements", &Povm::elements)
        .def("projective", &Povm::projective, "tol"_a = 1e-8);
    py::class_<Realization>(m, "Realization")
        .def(py::init<>())
        .def_readwrite("state", &Realization::state)
        .def_readwrite("povms_a", &Realization::povms_a)
        .def_readwrite("povms_b", &Realization::povms_b)
        .def("validate", &Realization::validate)
        .def_static("from_text", &parse_realization, "text"_a)
        .def("to_text", &serialize_realization);
    m.def("correlation", &correlation, "r"_a);
    m.def("negativity", &negativity, "rho"_a);
    m.def("psi_gamma", &psi_gamma, "gamma"_a, "gamma_prime"_a);
    m.def("bell_value", &bell_value, "f"_a, "r"_a);
    m.def("reference_i12_realization", &reference_i12_realization);
    m.def("project_povm_to_subspace", &project_povm_to_subspace, "povm"_a, "rank"_a = 2);
    m.def("infer_state_visibility", &infer_state_visibility, "s_exp"_a, "r"_a, "f"_a);

    py::class_<SeesawResult>(m, "SeesawResult")
        .def_readonly("value", &SeesawResult::value)
        .def_readonly("realization", &SeesawResult::realization)
        .def_readonly("trace", &SeesawResult::trace)
        .def_readonly("restart_values", &SeesawResult::restart_values)
        .def_readonly("converged", &SeesawResult::converged);
    m.def(
        "seesaw",
        [](const BellFunctional& f, int dim_a, int dim_b, MeasurementMode mode, Side side, int restarts,
           std::uint64_t seed, int threads) {
            SeesawOptions o;
            o.mode = mode;
            o.side = side;
            o.restarts = restarts;
            o.seed = seed;
            o.threads = threads;
            py::gil_scoped_release nogil;
            return seesaw_maximize(f, dim_a, dim_b, o);
        },
        "f"_a, "dim_a"_a = 2, "dim_b"_a = 2, "mode"_a = MeasurementMode::Projective, "side"_a = Side::Max,
        "restarts"_a = 50, "seed"_a = 1, "threads"_a = 0);

    // moment relaxations
    py::class_<SdpSummary>(m, "SdpSummary")
        .def_property_readonly("status", [](const SdpSummary& s) { return to_string(s.status); })
        .def_readonly("gap", &SdpSummary::gap)
        .def_readonly("infeasibility", &SdpSummary::infeasibility)
        .def_readonly("iterations", &SdpSummary::iterations);
    py::class_<QuantumBound>(m, "QuantumBound")
        .def_readonly("value", &QuantumBound::value)
        .def_readonly("cg", &QuantumBound::cg)
        .def_readonly("solver", &QuantumBound::solver);
    m.def(
        "quantum_bound",
        [](const BellFunctional& f, MomentLevel level, Side side) {
            py::gil_scoped_release nogil;
            return quantum_bound(f, level, side);
        },
        "f"_a, "level"_a = MomentLevel::Npa1AB, "side"_a = Side::Max);

    py::class_<NearestQuantumResult>(m, "NearestQuantumResult")
        .def_readonly("table", &NearestQuantumResult::table)
        .def_readonly("l1_distance", &NearestQuantumResult::l1_distance)
        .def_readonly("l2_distance", &NearestQuantumResult::l2_distance)
        .def("metadata_json", &NearestQuantumResult::metadata_json);
    m.def(
        "nearest_quantum_correlation",
        [](const ProbabilityTable& p, MomentLevel level, std::optional<BellFunctional> pin_f,
           std::optional<double> pin_value) {
            std::optional<std::pair<BellFunctional, double>> pin;
            if (pin_f.has_value() != pin_value.has_value())
                throw ValidationError("pin needs both a functional and a value");
            if (pin_f) pin = std::pair{*pin_f, *pin_value};
            py::gil_scoped_release nogil;
            return nearest_quantum_correlation(p, level, pin);
        },
        "p"_a, "level"_a = MomentLevel::Npa1AB, "pin_functional"_a = py::none(), "pin_value"_a = py::none());

    py::class_<NegativityBound>(m, "NegativityBound")
        .def_readonly("value", &NegativityBound::value)
        .def_readonly("noise", &NegativityBound::noise)
        .def_readonly("solver", &NegativityBound::solver);
    m.def(
        "di_negativity_bound",
        [](const ProbabilityTable& p, MomentLevel level) {
            py::gil_scoped_release nogil;
            return di_negativity_bound(p, level);
        },
        "p"_a, "level"_a = MomentLevel::Local1PPT);
    m.def(
        "di_negativity_bound_from_value",
        [](const BellFunctional& f, double value, MomentLevel level) {
            py::gil_scoped_release nogil;
            return di_negativity_bound_from_value(f, value, level);
        },
        "f"_a, "value"_a, "level"_a = MomentLevel::Local1PPT);

    // simulation
    py::class_<MarginalBias>(m, "MarginalBias")
        .def(py::init([](Party party, int setting, int outcome, int other, double delta) {
                 return MarginalBias{party, setting, outcome, other, delta};
             }),
             "party"_a, "setting"_a, "outcome"_a, "other"_a = -1, "delta"_a = 0.0);
    m.def("apply_biases", &apply_biases, "p"_a, "biases"_a);
    m.def(
        "simulate_counts",
        [](const ProbabilityTable& p, std::uint64_t shots, std::uint64_t seed, std::vector<MarginalBias> biases) {
            ShotPlan plan;
            plan.shots = shots;
            plan.seed = seed;
            plan.biases = std::move(biases);
            py::gil_scoped_release nogil;
            return simulate_counts(p, plan);
        },
        "p"_a, "shots"_a = 10000, "seed"_a = 1, "biases"_a = std::vector<MarginalBias>{});

    m.def("run_cli", &run_cli, "args"_a, "Run the command-line tool; returns (exit code, stdout, stderr).");
}
