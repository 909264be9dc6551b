#pragma once

#include <Eigen/Dense>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace bellscope {

enum class BlockKind { Psd, Diagonal };

// Problems are assembled as linear matrix inequalities in a vector y:
//
//   maximize  b'y
//   subject to  C_k + sum_i y_i G_ik  psd   (or entrywise >= 0 for diagonal blocks)
//               E y = e
//
// which is the dual of the standard form
//
//   minimize  sum_k <C_k, X_k> + e'z
//   subject to  sum_k <G_ik, X_k> + (E'z)_i = -b_i,  X_k psd,  z free.
//
// The primal blocks X_k are the multipliers of the matrix inequalities.
class SdpProblem {
public:
    explicit SdpProblem(int num_vars = 0);

    int num_vars() const { return m_; }
    int add_var(double objective = 0.0);
    void set_objective(int var, double b) { b_.at(var) = b; }
    double objective(int var) const { return b_.at(var); }

    int add_block(int size, BlockKind kind = BlockKind::Psd);
    int num_blocks() const { return static_cast<int>(blocks_.size()); }
    int block_size(int k) const { return blocks_.at(k).size; }
    BlockKind block_kind(int k) const { return blocks_.at(k).kind; }

    // entry (r, c) and its mirror; for diagonal blocks r must equal c
    void add_constant(int block, int r, int c, double v);
    void add_term(int block, int var, int r, int c, double v);
    // sum_i coeffs_i y_i = rhs
    void add_equality(const std::vector<std::pair<int, double>>& coeffs, double rhs);
    int num_equalities() const { return static_cast<int>(eq_rhs_.size()); }

    // SDPA sparse format of the matrix inequality form; equalities become two diagonal rows
    void write_sdpa(std::ostream& out) const;

    struct Entry {
        int row, col;
        double value;
    };
    struct Block {
        int size = 0;
        BlockKind kind = BlockKind::Psd;
        std::vector<Entry> constant;
        std::vector<std::pair<int, Entry>> terms;  // (var, entry)
    };
    const Block& block(int k) const { return blocks_.at(k); }
    const std::vector<double>& objective() const { return b_; }
    const std::vector<std::vector<std::pair<int, double>>>& equality_rows() const { return eq_rows_; }
    const std::vector<double>& equality_rhs() const { return eq_rhs_; }

private:
    int m_;
    std::vector<double> b_;
    std::vector<Block> blocks_;
    std::vector<std::vector<std::pair<int, double>>> eq_rows_;
    std::vector<double> eq_rhs_;
};

enum class SdpStatus {
    Optimal,
    Infeasible,   // no y satisfies the matrix inequalities
    Unbounded,    // b'y unbounded above
    MaxIterations,
    NumericalFailure
};
std::string to_string(SdpStatus s);

struct SdpOptions {
    int max_iterations = 120;
    double gap_tol = 1e-9;        // relative duality gap
    double feas_tol = 1e-9;       // relative residuals
    double step_fraction = 0.98;
    bool verbose = false;
};

struct SdpSolution {
    SdpStatus status = SdpStatus::NumericalFailure;
    double objective = 0.0;         // b'y
    double primal_objective = 0.0;  // <C, X> + e'z
    double duality_gap = 0.0;       // |primal - dual|
    double relative_gap = 0.0;
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    int iterations = 0;
    bool reduced_accuracy = false;
    Eigen::VectorXd y;
    std::vector<Eigen::MatrixXd> X;  // multipliers
    std::vector<Eigen::MatrixXd> S;  // slack C + sum y_i G_i
    Eigen::VectorXd z;               // equality multipliers

    double max_infeasibility() const { return std::max(primal_infeasibility, dual_infeasibility); }
};

SdpSolution sdp_solve(const SdpProblem& p, const SdpOptions& opt = {});

}  // namespace bellscope
