#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bellscope/polytope.hpp"
#include "bellscope/quantum.hpp"
#include "bellscope/scenario.hpp"
#include "bellscope/sdp.hpp"

namespace bellscope {

// Npa1: 1, A, B.  Npa1AB and Local1: 1, A, B, AB (tensor indexed).
// Npa2: all words of length <= 2.  Local1PPT: Local1 plus the PPT split.
enum class MomentLevel { Npa1, Npa1AB, Npa2, Local1, Local1PPT };
std::string to_string(MomentLevel l);
MomentLevel parse_level(const std::string& s);

// Projector words in the Collins-Gisin operator basis: operator k of a party
// is the projector for (setting, outcome) with outcome < outputs - 1,
// numbered like the CG rows (Alice) and columns (Bob).
using Word = std::vector<int>;

struct MomentClass {
    enum Kind { One, Data, Free } kind = Free;
    int index = 0;  // CG coordinate for Data, free variable for Free
    std::pair<Word, Word> word;
};

struct MomentStructure {
    MomentLevel level = MomentLevel::Npa1AB;
    Scenario scenario = Scenario::flagship();
    std::vector<std::pair<Word, Word>> words;  // row labels (Alice word, Bob word)
    std::vector<int> entry_class;              // size*size, -1 for entries that vanish
    std::vector<MomentClass> classes;
    int num_free = 0;
    // entry -> entry of the partial transpose on Bob; empty unless tensor indexed
    std::vector<int> partial_transpose;

    int size() const { return static_cast<int>(words.size()); }
    int cls(int r, int c) const { return entry_class[static_cast<std::size_t>(r) * size() + c]; }
    // chi = F_0 + sum_k g_k F_k + sum_v u_v F_v
    Eigen::MatrixXd assemble(const std::vector<double>& g, const Eigen::VectorXd& u) const;
    // positions of one class, r <= c
    std::vector<std::pair<int, int>> support(int cls) const;
};

MomentStructure build_structure(const Scenario& s, MomentLevel level);

// Real part of the exact moment matrix of a projective realization.
Eigen::MatrixXd moment_matrix(const Realization& r, const MomentStructure& ms);
// Entries in one class agree, vanishing entries vanish, the identity entry is 1
// and data entries match the given CG vector, all to tol.
bool consistent(const MomentStructure& ms, const Eigen::MatrixXd& chi, const std::vector<double>& g, double tol);

struct SdpSummary {
    SdpStatus status = SdpStatus::NumericalFailure;
    double gap = 0.0;
    double infeasibility = 0.0;
    int iterations = 0;
    bool reduced_accuracy = false;
};
SdpSummary summarize(const SdpSolution& s);

struct QuantumBound {
    double value = 0.0;
    std::vector<double> cg;  // optimal CG coordinates
    SdpSummary solver;
};

// Max (or min) of f over correlations admitting a PSD moment matrix at the level.
QuantumBound quantum_bound(const BellFunctional& f, MomentLevel level, Side side = Side::Max,
                           const SdpOptions& opt = {});
inline double quantum_upper_bound(const BellFunctional& f, MomentLevel level) {
    return quantum_bound(f, level, Side::Max).value;
}

struct NearestQuantumResult {
    ProbabilityTable table = ProbabilityTable::uniform(Scenario::flagship());
    double l1_distance = 0.0;   // sum |P - P_exp|
    double l1_stage_one = 0.0;  // optimum of the first stage
    double l2_distance = 0.0;
    std::optional<std::pair<BellFunctional, double>> constraint;
    MomentLevel level = MomentLevel::Npa1AB;
    SdpSummary stage_one;
    SdpSummary stage_two;
    // "distance", "level", "constraint", "gap" as JSON text
    std::string metadata_json() const;
};

// l1-nearest correlation with a PSD moment matrix, optionally pinned to
// evaluate(f, P) = target; ties broken by the l2 distance.
NearestQuantumResult nearest_quantum_correlation(const ProbabilityTable& p_exp, MomentLevel level,
                                                 const std::optional<std::pair<BellFunctional, double>>& pin = {},
                                                 const SdpOptions& opt = {});

struct NegativityBound {
    double value = 0.0;
    double noise = 0.0;  // white-noise weight mixed into p before solving
    SdpSummary solver;
};

// min chi_minus[1,1] s.t. chi >= 0, chi_minus >= 0, chi^{T_B} + chi_minus >= 0.
NegativityBound di_negativity_bound(const ProbabilityTable& p, MomentLevel level = MomentLevel::Local1PPT,
                                    const SdpOptions& opt = {});
// Same bound using only the value of one Bell functional: the minimum over
// every correlation with evaluate(f, P) = value.
NegativityBound di_negativity_bound_from_value(const BellFunctional& f, double value,
                                               MomentLevel level = MomentLevel::Local1PPT, const SdpOptions& opt = {});
inline double di_negativity_lower_bound(const ProbabilityTable& p, MomentLevel level = MomentLevel::Local1PPT) {
    return di_negativity_bound(p, level).value;
}

}  // namespace bellscope
