#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "bellscope/polytope.hpp"
#include "bellscope/scenario.hpp"

namespace bellscope {

// maximize c'x  subject to  A x = b,  x_j >= 0 unless free_vars[j]
struct LpProblem {
    Eigen::VectorXd c;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    std::vector<bool> free_vars;  // empty means all nonnegative
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };
std::string to_string(LpStatus s);

// Dual: minimize b'y subject to A'y >= c (equality on free columns).
struct LpSolution {
    LpStatus status = LpStatus::IterationLimit;
    double objective = 0.0;
    double dual_objective = 0.0;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    double duality_gap = 0.0;
    double primal_residual = 0.0;
    double dual_infeasibility = 0.0;
    int iterations = 0;
};

struct LpOptions {
    int max_iterations = 200000;
    double tol = 1e-9;
    int refactor_every = 50;
};

LpSolution lp_solve(const LpProblem& lp, const LpOptions& opt = {});

struct VisibilityResult {
    double v_cr = 1.0;
    bool nonlocal = false;
    BellFunctional certificate;     // CG form, only meaningful when nonlocal
    double certificate_value = 0.0; // certificate on the input table
    LpSolution lp;
};

// Largest v with v p + (1 - v) uniform inside the local polytope, capped at 1.
VisibilityResult visibility_wrt_local_set(const ProbabilityTable& p);
// Same question for the half-space of a single inequality.
double visibility_wrt_inequality(const ProbabilityTable& p, const BellFunctional& f);

struct FacetCertificate {
    BellFunctional functional;
    FaceAnalysis face;
    double visibility = 1.0;
    double violation = 0.0;
};

FacetCertificate facet_from_correlation(const ProbabilityTable& p);

}  // namespace bellscope
