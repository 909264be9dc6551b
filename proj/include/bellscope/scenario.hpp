#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bellscope/errors.hpp"

namespace bellscope {

// Inputs and outputs of a two-party Bell scenario.
// Full tables are indexed (x, y, a, b) with x slowest and b fastest.
// Collins-Gisin vectors drop the last outcome of every setting and are laid
// out column by column: Alice marginals first, then for each Bob column
// (y, b) the Bob marginal followed by the joint terms in Alice row order.
class Scenario {
public:
    Scenario(std::vector<int> outputs_a, std::vector<int> outputs_b);

    static Scenario uniform(int inputs_a, int inputs_b, int outputs);
    static Scenario flagship() { return uniform(3, 3, 3); }

    int inputs_a() const { return static_cast<int>(oa_.size()); }
    int inputs_b() const { return static_cast<int>(ob_.size()); }
    int outputs_a(int x) const { return oa_.at(x); }
    int outputs_b(int y) const { return ob_.at(y); }
    const std::vector<int>& outputs_a() const { return oa_; }
    const std::vector<int>& outputs_b() const { return ob_; }

    std::size_t full_dimension() const { return full_dim_; }
    std::size_t cg_dimension() const { return na_ + nb_ * (na_ + 1); }
    std::size_t cg_rows() const { return na_; }
    std::size_t cg_cols() const { return nb_; }
    std::size_t num_vertices() const;

    std::size_t full_index(int x, int y, int a, int b) const {
        return block_[x * ob_.size() + y] + static_cast<std::size_t>(a) * ob_[y] + b;
    }
    std::size_t block_offset(int x, int y) const { return block_[x * ob_.size() + y]; }

    // row/column of the CG table, a < outputs_a(x) - 1 and b < outputs_b(y) - 1
    std::size_t cg_row(int x, int a) const { return row_[x] + a; }
    std::size_t cg_col(int y, int b) const { return col_[y] + b; }
    std::size_t cg_alice(int x, int a) const { return cg_row(x, a); }
    std::size_t cg_bob(int y, int b) const { return na_ + cg_col(y, b) * (na_ + 1); }
    std::size_t cg_joint(int x, int a, int y, int b) const { return cg_bob(y, b) + 1 + cg_row(x, a); }

    // "{[3 3 3][3 3 3]}"
    std::string tag() const;

    bool operator==(const Scenario& o) const { return oa_ == o.oa_ && ob_ == o.ob_; }
    bool operator!=(const Scenario& o) const { return !(*this == o); }

private:
    std::vector<int> oa_, ob_;
    std::vector<std::size_t> block_, row_, col_;
    std::size_t full_dim_ = 0, na_ = 0, nb_ = 0;
};

// Affine expression c + sum_k w_k g_k in CG coordinates.
struct AffineRow {
    double constant = 0.0;
    std::vector<std::pair<std::size_t, double>> terms;
};

// Full probabilities of a non-signaling table as affine functions of its CG vector.
std::vector<AffineRow> full_point_map(const Scenario& s);

class ProbabilityTable {
public:
    ProbabilityTable(Scenario s, std::vector<double> entries, double tol = 1e-9);

    static ProbabilityTable uniform(const Scenario& s);
    // Non-signaling table with the given CG coordinates.
    static ProbabilityTable from_cg(const Scenario& s, const std::vector<double>& g, double tol = 1e-9);
    // Local deterministic strategy, one outcome per setting.
    static ProbabilityTable deterministic(const Scenario& s, const std::vector<int>& out_a, const std::vector<int>& out_b);

    const Scenario& scenario() const { return s_; }
    const std::vector<double>& entries() const { return p_; }
    double operator()(int x, int y, int a, int b) const { return p_[s_.full_index(x, y, a, b)]; }

    double alice_marginal(int x, int y, int a) const;
    double bob_marginal(int x, int y, int b) const;
    // averaged over the other party's settings
    double alice_marginal(int x, int a) const;
    double bob_marginal(int y, int b) const;

    std::vector<double> cg() const;

private:
    Scenario s_;
    std::vector<double> p_;
};

class CountsTable {
public:
    CountsTable(Scenario s, std::vector<std::uint64_t> counts);

    const Scenario& scenario() const { return s_; }
    const std::vector<std::uint64_t>& counts() const { return n_; }
    std::uint64_t operator()(int x, int y, int a, int b) const { return n_[s_.full_index(x, y, a, b)]; }
    std::uint64_t total(int x, int y) const;

private:
    Scenario s_;
    std::vector<std::uint64_t> n_;
};

ProbabilityTable frequencies_from_counts(const CountsTable& c);

// v * p + (1 - v) * uniform
ProbabilityTable mix_with_white_noise(const ProbabilityTable& p, double v);

enum class Form { CG, Full };

struct BellFunctional {
    Scenario scenario = Scenario::flagship();
    Form form = Form::CG;
    std::vector<double> coefficients;
    double offset = 0.0;
    std::optional<double> local_max;
    std::optional<double> local_min;

    void validate() const;
    BellFunctional negated() const;
};

double evaluate(const BellFunctional& f, const ProbabilityTable& p);
BellFunctional full_from_cg(const BellFunctional& f);
BellFunctional cg_from_full(const BellFunctional& f);

enum class Party { Alice, Bob };

// |P(a|x,y1) - P(a|x,y2)| for Alice, and likewise for Bob.
struct SignalingDelta {
    Party party = Party::Alice;
    int setting = 0;
    int outcome = 0;
    int other_1 = 0;
    int other_2 = 0;
    double delta = 0.0;
    double sigma = 0.0;  // multinomial standard error, counts only
};

struct SignalingReport {
    std::vector<SignalingDelta> deltas;
    double max_delta = 0.0;
    bool has_sigma = false;

    // largest |delta| / sigma
    double max_z() const;
    // number of deltas outside k sigma
    std::size_t count_outside(double k_sigma) const;
    // Bonferroni-corrected k sigma test over all deltas
    bool flags(double k_sigma = 2.0) const;
};

SignalingReport signaling_deltas(const ProbabilityTable& p);
SignalingReport signaling_deltas(const CountsTable& c);
bool check_nonsignaling(const ProbabilityTable& p, double tol = 1e-9);

// Two-sided z threshold giving family-wise level erfc(k/sqrt 2) over m tests.
double bonferroni_band(double k_sigma, std::size_t m);

}  // namespace bellscope
