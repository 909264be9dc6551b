#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bellscope/polytope.hpp"
#include "bellscope/scenario.hpp"

namespace bellscope {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// Bipartite state on C^dim_a (x) C^dim_b, Alice's index slowest.
struct DensityMatrix {
    int dim_a = 1;
    int dim_b = 1;
    CMat matrix;

    DensityMatrix() = default;
    DensityMatrix(int da, int db, CMat m);
    static DensityMatrix pure(const CVec& psi, int da, int db);
    static DensityMatrix maximally_mixed(int da, int db);
    void validate() const;
};

struct Povm {
    std::vector<CMat> elements;

    Povm() = default;
    explicit Povm(std::vector<CMat> e) : elements(std::move(e)) {}
    int dim() const { return elements.empty() ? 0 : static_cast<int>(elements.front().rows()); }
    int outcomes() const { return static_cast<int>(elements.size()); }
    bool projective(double tol = 1e-8) const;
    void validate() const;
    // rank-1 projectors onto the columns of a unitary, zero for the extra outcomes
    static Povm from_basis(const CMat& U, int outcomes);
};

struct Realization {
    DensityMatrix state;
    std::vector<Povm> povms_a;
    std::vector<Povm> povms_b;

    Scenario scenario() const;
    void validate() const;
};

ProbabilityTable correlation(const Realization& r);

// (|00> + g|11> + g'|22>) / norm on two qutrits
DensityMatrix psi_gamma(double gamma, double gamma_prime);

CMat partial_transpose_b(const CMat& rho, int da, int db);
double negativity(const DensityMatrix& rho);

// Weight on the ideal state at which the observed value is explained by
// mixing with the maximally mixed state under the same measurements.
double infer_state_visibility(double s_exp, const Realization& r, const BellFunctional& f);

// Compression onto span{|0>, ..., |rank-1>}
Povm project_povm_to_subspace(const Povm& p, int rank = 2);

// Qutrit projective measurements reaching the maximal qubit value of
// inequality 12, with state 0.7258|00> + 0.6879|11>.
Realization reference_i12_realization();

// Bell operator sum_{xyab} c_{xyab} M_{a|x} (x) N_{b|y} (without the offset)
CMat bell_operator(const BellFunctional& f, const std::vector<Povm>& povms_a, const std::vector<Povm>& povms_b);
double bell_value(const BellFunctional& f, const Realization& r);

enum class MeasurementMode { Povm, Projective };

struct SeesawOptions {
    MeasurementMode mode = MeasurementMode::Projective;
    Side side = Side::Max;
    int restarts = 50;
    double tol = 1e-10;      // value gain counted as stalled
    int stall_sweeps = 3;
    int max_iterations = 500;
    // projective mode: also descend from every assignment of zero elements
    // to settings with one outcome more than the local dimension
    bool zero_sweep = true;
    std::uint64_t seed = 1;
    int threads = 0;         // 0: worker_count()
};

struct SeesawResult {
    double value = 0.0;   // f's value, on the requested side
    Realization realization;
    std::vector<double> trace;   // per-sweep values of the winning restart
    std::vector<double> restart_values;
    int best_restart = 0;
    bool converged = false;
};

SeesawResult seesaw_maximize(const BellFunctional& f, int dim_a, int dim_b, const SeesawOptions& opt = {});

// Haar-distributed unitary
CMat haar_unitary(int d, std::uint64_t seed);

// Text format: scenario line, "dims dA dB", "state" then the matrix rows,
// then "povm A x" / "povm B y" blocks with one "outcome a" matrix each.
Realization parse_realization(const std::string& text);
std::string serialize_realization(const Realization& r);

}  // namespace bellscope
