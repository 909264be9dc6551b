#include "bellscope/moment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <unsupported/Eigen/KroneckerProduct>

#include "bellscope/errors.hpp"
#include "json.hpp"

namespace bellscope {

std::string to_string(MomentLevel l) {
    switch (l) {
        case MomentLevel::Npa1: return "npa1";
        case MomentLevel::Npa1AB: return "npa1ab";
        case MomentLevel::Npa2: return "npa2";
        case MomentLevel::Local1: return "local1";
        case MomentLevel::Local1PPT: return "local1ppt";
    }
    return "?";
}

MomentLevel parse_level(const std::string& s) {
    std::string t;
    for (char c : s)
        if (c != '_' && c != '-' && c != '+') t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (auto l : {MomentLevel::Npa1, MomentLevel::Npa1AB, MomentLevel::Npa2, MomentLevel::Local1, MomentLevel::Local1PPT})
        if (t == to_string(l)) return l;
    throw ValidationError("unsupported moment level '" + s + "'");
}

namespace {

struct Alphabet {
    std::vector<int> setting_a, setting_b;  // operator -> setting
};

Alphabet alphabet(const Scenario& s) {
    Alphabet al;
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int a = 0; a + 1 < s.outputs_a(x); ++a) al.setting_a.push_back(x);
    for (int y = 0; y < s.inputs_b(); ++y)
        for (int b = 0; b + 1 < s.outputs_b(y); ++b) al.setting_b.push_back(y);
    return al;
}

// product of projectors with idempotence and same-setting orthogonality; false if zero
bool reduce(const Word& w, const std::vector<int>& setting, Word& out) {
    out.clear();
    for (int op : w) {
        if (!out.empty()) {
            if (out.back() == op) continue;
            if (setting[out.back()] == setting[op]) return false;
        }
        out.push_back(op);
    }
    return true;
}

bool product(const Word& row, const Word& col, const std::vector<int>& setting, Word& out) {
    Word w(row.rbegin(), row.rend());
    w.insert(w.end(), col.begin(), col.end());
    return reduce(w, setting, out);
}

Word reversed(const Word& w) { return Word(w.rbegin(), w.rend()); }

bool tensor_level(MomentLevel l) {
    return l == MomentLevel::Npa1AB || l == MomentLevel::Local1 || l == MomentLevel::Local1PPT;
}

}  // namespace

MomentStructure build_structure(const Scenario& s, MomentLevel level) {
    MomentStructure ms;
    ms.level = level;
    ms.scenario = s;
    auto al = alphabet(s);
    const int na = static_cast<int>(al.setting_a.size());
    const int nb = static_cast<int>(al.setting_b.size());

    auto& W = ms.words;
    if (level == MomentLevel::Npa1) {
        W.push_back({{}, {}});
        for (int i = 0; i < na; ++i) W.push_back({{i}, {}});
        for (int k = 0; k < nb; ++k) W.push_back({{}, {k}});
    } else if (tensor_level(level)) {
        for (int i = -1; i < na; ++i)
            for (int k = -1; k < nb; ++k) W.push_back({i < 0 ? Word{} : Word{i}, k < 0 ? Word{} : Word{k}});
    } else if (level == MomentLevel::Npa2) {
        W.push_back({{}, {}});
        for (int i = 0; i < na; ++i) W.push_back({{i}, {}});
        for (int k = 0; k < nb; ++k) W.push_back({{}, {k}});
        for (int i = 0; i < na; ++i)
            for (int j = 0; j < na; ++j)
                if (al.setting_a[i] != al.setting_a[j]) W.push_back({{i, j}, {}});
        for (int k = 0; k < nb; ++k)
            for (int l = 0; l < nb; ++l)
                if (al.setting_b[k] != al.setting_b[l]) W.push_back({{}, {k, l}});
        for (int i = 0; i < na; ++i)
            for (int k = 0; k < nb; ++k) W.push_back({{i}, {k}});
    } else {
        throw ValidationError("unsupported moment level");
    }

    const int n = ms.size();
    ms.entry_class.assign(static_cast<std::size_t>(n) * n, -1);
    std::map<std::pair<Word, Word>, int> index;
    Word wa, wb;
    for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c) {
            if (!product(W[r].first, W[c].first, al.setting_a, wa)) continue;
            if (!product(W[r].second, W[c].second, al.setting_b, wb)) continue;
            auto key = std::min(std::make_pair(wa, wb), std::make_pair(reversed(wa), reversed(wb)));
            auto it = index.find(key);
            int id;
            if (it == index.end()) {
                id = static_cast<int>(ms.classes.size());
                index.emplace(key, id);
                MomentClass mc;
                mc.word = key;
                const auto& [ka, kb] = key;
                if (ka.size() <= 1 && kb.size() <= 1) {
                    if (ka.empty() && kb.empty()) {
                        mc.kind = MomentClass::One;
                    } else {
                        mc.kind = MomentClass::Data;
                        std::size_t bob = kb.empty() ? 0 : s.cg_rows() + kb[0] * (s.cg_rows() + 1);
                        if (kb.empty()) mc.index = ka[0];
                        else if (ka.empty()) mc.index = static_cast<int>(bob);
                        else mc.index = static_cast<int>(bob + 1 + ka[0]);
                    }
                } else {
                    mc.kind = MomentClass::Free;
                    mc.index = ms.num_free++;
                }
                ms.classes.push_back(mc);
            } else {
                id = it->second;
            }
            ms.entry_class[static_cast<std::size_t>(r) * n + c] = id;
            ms.entry_class[static_cast<std::size_t>(c) * n + r] = id;
        }

    if (tensor_level(level)) {
        const int nb1 = nb + 1;
        ms.partial_transpose.resize(static_cast<std::size_t>(n) * n);
        for (int I = 0; I < n; ++I)
            for (int J = 0; J < n; ++J) {
                int i = I / nb1, k = I % nb1, j = J / nb1, l = J % nb1;
                ms.partial_transpose[static_cast<std::size_t>(I) * n + J] = (i * nb1 + l) * n + (j * nb1 + k);
            }
    }
    return ms;
}

Eigen::MatrixXd MomentStructure::assemble(const std::vector<double>& g, const Eigen::VectorXd& u) const {
    const int n = size();
    Eigen::MatrixXd chi = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            int id = cls(r, c);
            if (id < 0) continue;
            const auto& mc = classes[id];
            chi(r, c) = mc.kind == MomentClass::One ? 1.0 : mc.kind == MomentClass::Data ? g.at(mc.index) : u(mc.index);
        }
    return chi;
}

std::vector<std::pair<int, int>> MomentStructure::support(int id) const {
    std::vector<std::pair<int, int>> out;
    for (int r = 0; r < size(); ++r)
        for (int c = r; c < size(); ++c)
            if (cls(r, c) == id) out.emplace_back(r, c);
    return out;
}

Eigen::MatrixXd moment_matrix(const Realization& r, const MomentStructure& ms) {
    r.validate();
    if (r.scenario() != ms.scenario) throw ValidationError("realization scenario does not match the moment structure");
    const Scenario& s = ms.scenario;
    const int da = r.state.dim_a, db = r.state.dim_b;
    std::vector<CMat> opa, opb;
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int a = 0; a + 1 < s.outputs_a(x); ++a) opa.push_back(r.povms_a[x].elements[a]);
    for (int y = 0; y < s.inputs_b(); ++y)
        for (int b = 0; b + 1 < s.outputs_b(y); ++b) opb.push_back(r.povms_b[y].elements[b]);
    auto word_op = [](const Word& w, const std::vector<CMat>& ops, int d) {
        CMat m = CMat::Identity(d, d);
        for (int k : w) m = m * ops[k];
        return m;
    };
    const int n = ms.size();
    std::vector<CMat> left(n), right(n);
    for (int i = 0; i < n; ++i) {
        CMat A = word_op(ms.words[i].first, opa, da), B = word_op(ms.words[i].second, opb, db);
        CMat K = Eigen::kroneckerProduct(A, B).eval();
        left[i] = K.adjoint();
        right[i] = K;
    }
    Eigen::MatrixXd chi(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double v = (r.state.matrix * left[i] * right[j]).trace().real();
            chi(i, j) = chi(j, i) = v;
        }
    return chi;
}

bool consistent(const MomentStructure& ms, const Eigen::MatrixXd& chi, const std::vector<double>& g, double tol) {
    const int n = ms.size();
    if (chi.rows() != n || chi.cols() != n) return false;
    std::vector<double> first(ms.classes.size(), std::nan(""));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            int id = ms.cls(r, c);
            double v = chi(r, c);
            if (id < 0) {
                if (std::abs(v) > tol) return false;
                continue;
            }
            const auto& mc = ms.classes[id];
            if (mc.kind == MomentClass::One && std::abs(v - 1.0) > tol) return false;
            if (mc.kind == MomentClass::Data && std::abs(v - g.at(mc.index)) > tol) return false;
            if (std::isnan(first[id])) first[id] = v;
            else if (std::abs(v - first[id]) > tol) return false;
        }
    return true;
}

SdpSummary summarize(const SdpSolution& s) {
    SdpSummary out;
    out.status = s.status;
    out.gap = s.relative_gap;
    out.infeasibility = s.max_infeasibility();
    out.iterations = s.iterations;
    out.reduced_accuracy = s.reduced_accuracy;
    return out;
}

namespace {

// One source per class: a variable, or a constant.
struct ClassSource {
    int var = -1;
    double value = 0.0;
};

void add_chi(SdpProblem& P, int blk, const MomentStructure& ms, const std::vector<ClassSource>& src,
             bool transposed = false) {
    const int n = ms.size();
    for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c) {
            std::size_t e = static_cast<std::size_t>(r) * n + c;
            if (transposed) e = static_cast<std::size_t>(ms.partial_transpose[e]);
            int id = ms.entry_class[e];
            if (id < 0) continue;
            const auto& cs = src[id];
            if (cs.var >= 0) P.add_term(blk, cs.var, r, c, 1.0);
            else if (cs.value != 0.0) P.add_constant(blk, r, c, cs.value);
        }
}

// sources with CG data held in variables g_off.. and free entries in u_off..
std::vector<ClassSource> variable_sources(const MomentStructure& ms, int g_off, int u_off) {
    std::vector<ClassSource> src(ms.classes.size());
    for (std::size_t k = 0; k < ms.classes.size(); ++k) {
        const auto& mc = ms.classes[k];
        if (mc.kind == MomentClass::One) src[k].value = 1.0;
        else if (mc.kind == MomentClass::Data) src[k].var = g_off + mc.index;
        else src[k].var = u_off + mc.index;
    }
    return src;
}

std::vector<double> cg_coefficients(const BellFunctional& f, double& offset) {
    f.validate();
    BellFunctional c = f.form == Form::CG ? f : cg_from_full(f);
    offset = c.offset;
    return c.coefficients;
}

void require(const SdpSolution& sol, const char* what) {
    if (sol.status != SdpStatus::Optimal)
        throw SolverError(std::string(what) + ": SDP " + to_string(sol.status));
}

std::vector<double> extract(const Eigen::VectorXd& y, int off, int n) {
    std::vector<double> g(n);
    for (int k = 0; k < n; ++k) g[k] = y(off + k);
    return g;
}

}  // namespace

QuantumBound quantum_bound(const BellFunctional& f, MomentLevel level, Side side, const SdpOptions& opt) {
    double offset = 0.0;
    auto beta = cg_coefficients(f, offset);
    const Scenario& s = f.scenario;
    auto ms = build_structure(s, level);
    const int ng = static_cast<int>(s.cg_dimension());
    const double sign = side == Side::Max ? 1.0 : -1.0;

    SdpProblem P;
    for (int k = 0; k < ng; ++k) P.add_var(sign * beta[k]);
    const int u_off = P.num_vars();
    for (int v = 0; v < ms.num_free; ++v) P.add_var();
    add_chi(P, P.add_block(ms.size()), ms, variable_sources(ms, 0, u_off));
    auto rows = full_point_map(s);
    int lp = P.add_block(static_cast<int>(rows.size()), BlockKind::Diagonal);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int d = static_cast<int>(i);
        if (rows[i].constant != 0.0) P.add_constant(lp, d, d, rows[i].constant);
        for (auto [k, w] : rows[i].terms) P.add_term(lp, static_cast<int>(k), d, d, w);
    }

    auto sol = sdp_solve(P, opt);
    require(sol, "quantum bound");
    QuantumBound out;
    out.value = sign * sol.objective + offset;
    out.cg = extract(sol.y, 0, ng);
    out.solver = summarize(sol);
    return out;
}

std::string NearestQuantumResult::metadata_json() const {
    nlohmann::json j;
    j["distance"] = l1_distance;
    j["distance_stage_one"] = l1_stage_one;
    j["l2_distance"] = l2_distance;
    j["level"] = to_string(level);
    if (constraint) {
        j["constraint"] = {{"coefficients", constraint->first.coefficients},
                           {"form", constraint->first.form == Form::CG ? "cg" : "full"},
                           {"offset", constraint->first.offset},
                           {"target", constraint->second}};
    } else {
        j["constraint"] = nullptr;
    }
    j["gap"] = {stage_one.gap, stage_two.gap};
    j["status"] = {to_string(stage_one.status), to_string(stage_two.status)};
    return j.dump(2);
}

NearestQuantumResult nearest_quantum_correlation(const ProbabilityTable& p_exp, MomentLevel level,
                                                 const std::optional<std::pair<BellFunctional, double>>& pin,
                                                 const SdpOptions& opt) {
    const Scenario& s = p_exp.scenario();
    auto ms = build_structure(s, level);
    const int ng = static_cast<int>(s.cg_dimension());
    auto rows = full_point_map(s);
    const int nf = static_cast<int>(rows.size());
    const auto& pe = p_exp.entries();

    std::vector<double> beta;
    double pin_rhs = 0.0;
    if (pin) {
        if (pin->first.scenario != s) throw ValidationError("constraint scenario does not match the table");
        double offset = 0.0;
        beta = cg_coefficients(pin->first, offset);
        pin_rhs = pin->second - offset;
    }

    // variables: g, u, D; the second stage appends t
    auto build = [&](SdpProblem& P, int& d_off) {
        for (int k = 0; k < ng; ++k) P.add_var();
        const int u_off = P.num_vars();
        for (int v = 0; v < ms.num_free; ++v) P.add_var();
        d_off = P.num_vars();
        for (int i = 0; i < nf; ++i) P.add_var(-1.0);
        add_chi(P, P.add_block(ms.size()), ms, variable_sources(ms, 0, u_off));
        int lp = P.add_block(3 * nf + 1, BlockKind::Diagonal);
        for (int i = 0; i < nf; ++i) {
            const auto& row = rows[i];
            // P_i >= 0, D_i - (P_i - pe_i) >= 0, D_i + (P_i - pe_i) >= 0
            int r0 = i, r1 = nf + i, r2 = 2 * nf + i;
            P.add_constant(lp, r0, r0, row.constant);
            P.add_constant(lp, r1, r1, pe[i] - row.constant);
            P.add_constant(lp, r2, r2, row.constant - pe[i]);
            for (auto [k, w] : row.terms) {
                int v = static_cast<int>(k);
                P.add_term(lp, v, r0, r0, w);
                P.add_term(lp, v, r1, r1, -w);
                P.add_term(lp, v, r2, r2, w);
            }
            P.add_term(lp, d_off + i, r1, r1, 1.0);
            P.add_term(lp, d_off + i, r2, r2, 1.0);
        }
        if (pin) {
            std::vector<std::pair<int, double>> eq;
            for (int k = 0; k < ng; ++k)
                if (beta[k] != 0.0) eq.emplace_back(k, beta[k]);
            P.add_equality(eq, pin_rhs);
        }
        return lp;
    };

    NearestQuantumResult out;
    out.level = level;
    out.constraint = pin;

    SdpProblem P1;
    int d_off = 0;
    int lp1 = build(P1, d_off);
    // last diagonal row unused in the first stage: keep it strictly feasible
    P1.add_constant(lp1, 3 * nf, 3 * nf, 1.0);
    auto s1 = sdp_solve(P1, opt);
    require(s1, "nearest quantum correlation");
    out.stage_one = summarize(s1);
    out.l1_stage_one = std::max(0.0, -s1.objective);

    SdpProblem P2;
    int lp2 = build(P2, d_off);
    for (int i = 0; i < nf; ++i) P2.set_objective(d_off + i, 0.0);
    const double budget = out.l1_stage_one + 1e-7 + 1e-6 * out.l1_stage_one;
    P2.add_constant(lp2, 3 * nf, 3 * nf, budget);
    for (int i = 0; i < nf; ++i) P2.add_term(lp2, d_off + i, 3 * nf, 3 * nf, -1.0);
    const int t = P2.add_var(-1.0);
    int q = P2.add_block(nf + 1);
    P2.add_term(q, t, 0, 0, 1.0);
    for (int i = 0; i < nf; ++i) {
        P2.add_constant(q, i + 1, i + 1, 1.0);
        P2.add_constant(q, 0, i + 1, rows[i].constant - pe[i]);
        for (auto [k, w] : rows[i].terms) P2.add_term(q, static_cast<int>(k), 0, i + 1, w);
    }
    auto s2 = sdp_solve(P2, opt);
    out.stage_two = summarize(s2);
    const auto& y = s2.status == SdpStatus::Optimal ? s2.y : s1.y;
    auto g = extract(y, 0, ng);

    std::vector<double> p(nf);
    for (int i = 0; i < nf; ++i) {
        double v = rows[i].constant;
        for (auto [k, w] : rows[i].terms) v += w * g[k];
        p[i] = std::max(0.0, v);
    }
    // renormalize each block after clipping solver-level negatives
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int yy = 0; yy < s.inputs_b(); ++yy) {
            std::size_t o = s.block_offset(x, yy), m = static_cast<std::size_t>(s.outputs_a(x)) * s.outputs_b(yy);
            double tot = 0.0;
            for (std::size_t k = 0; k < m; ++k) tot += p[o + k];
            for (std::size_t k = 0; k < m; ++k) p[o + k] /= tot;
        }
    out.table = ProbabilityTable(s, p);
    double l1 = 0.0, l2 = 0.0;
    for (int i = 0; i < nf; ++i) {
        double d = p[i] - pe[i];
        l1 += std::abs(d);
        l2 += d * d;
    }
    out.l1_distance = l1;
    out.l2_distance = std::sqrt(l2);
    return out;
}

namespace {

// Word combinations w with <w^dag w> a vanishing probability of p; any
// feasible chi has them in its kernel.
Eigen::MatrixXd forced_kernel(const MomentStructure& ms, const ProbabilityTable& p, double tol) {
    const Scenario& s = ms.scenario;
    const int na = static_cast<int>(s.cg_rows()), nb = static_cast<int>(s.cg_cols());
    auto proj_a = [&](int x, int a) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(na + 1);
        if (a + 1 < s.outputs_a(x)) {
            v(1 + static_cast<int>(s.cg_row(x, a))) = 1.0;
        } else {
            v(0) = 1.0;
            for (int k = 0; k + 1 < s.outputs_a(x); ++k) v(1 + static_cast<int>(s.cg_row(x, k))) = -1.0;
        }
        return v;
    };
    auto proj_b = [&](int y, int b) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(nb + 1);
        if (b + 1 < s.outputs_b(y)) {
            v(1 + static_cast<int>(s.cg_col(y, b))) = 1.0;
        } else {
            v(0) = 1.0;
            for (int k = 0; k + 1 < s.outputs_b(y); ++k) v(1 + static_cast<int>(s.cg_col(y, k))) = -1.0;
        }
        return v;
    };
    auto kron = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        Eigen::VectorXd v(a.size() * b.size());
        for (int i = 0; i < a.size(); ++i) v.segment(i * b.size(), b.size()) = a(i) * b;
        return v;
    };
    Eigen::VectorXd ea = Eigen::VectorXd::Unit(na + 1, 0), eb = Eigen::VectorXd::Unit(nb + 1, 0);
    std::vector<Eigen::VectorXd> vs;
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int a = 0; a < s.outputs_a(x); ++a) {
            if (p.alice_marginal(x, a) <= tol) vs.push_back(kron(proj_a(x, a), eb));
            for (int y = 0; y < s.inputs_b(); ++y)
                for (int b = 0; b < s.outputs_b(y); ++b)
                    if (p(x, y, a, b) <= tol) vs.push_back(kron(proj_a(x, a), proj_b(y, b)));
        }
    for (int y = 0; y < s.inputs_b(); ++y)
        for (int b = 0; b < s.outputs_b(y); ++b)
            if (p.bob_marginal(y, b) <= tol) vs.push_back(kron(ea, proj_b(y, b)));
    const int n = ms.size();
    if (vs.empty()) return Eigen::MatrixXd(n, 0);
    Eigen::MatrixXd K(n, static_cast<int>(vs.size()));
    for (std::size_t j = 0; j < vs.size(); ++j) K.col(static_cast<int>(j)) = vs[j];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    int r = 0;
    while (r < sv.size() && sv(r) > 1e-8 * sv(0)) ++r;
    return svd.matrixU().leftCols(r);
}

// chi >= 0 restricted to the complement of the forced kernel Kb, plus chi Kb = 0.
void add_reduced_chi(SdpProblem& P, const MomentStructure& ms, const std::vector<ClassSource>& src,
                     const Eigen::MatrixXd& Kb) {
    const int n = ms.size(), r = static_cast<int>(Kb.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Kb, Eigen::ComputeFullU);
    Eigen::MatrixXd Q = svd.matrixU().rightCols(n - r);
    const int m = static_cast<int>(Q.cols());
    const int blk = P.add_block(m);

    // per source: its matrix, then Q' M Q and M Kb
    std::map<int, Eigen::MatrixXd> by_var;
    Eigen::MatrixXd constant = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int id = ms.cls(i, j);
            if (id < 0) continue;
            const auto& cs = src[id];
            if (cs.var >= 0) {
                auto it = by_var.find(cs.var);
                if (it == by_var.end()) it = by_var.emplace(cs.var, Eigen::MatrixXd::Zero(n, n)).first;
                it->second(i, j) += 1.0;
            } else {
                constant(i, j) += cs.value;
            }
        }
    auto emit = [&](const Eigen::MatrixXd& M, int var) {
        Eigen::MatrixXd R = Q.transpose() * M * Q;
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) {
                double v = 0.5 * (R(i, j) + R(j, i));
                if (std::abs(v) < 1e-14) continue;
                if (var < 0) P.add_constant(blk, i, j, v);
                else P.add_term(blk, var, i, j, v);
            }
    };
    emit(constant, -1);
    for (const auto& [var, M] : by_var) emit(M, var);

    // chi Kb = 0, independent rows only
    std::vector<int> vars;
    for (const auto& kv : by_var) vars.push_back(kv.first);
    const int neq = n * r;
    Eigen::MatrixXd E(neq, static_cast<int>(vars.size()));
    Eigen::VectorXd rhs = -Eigen::Map<Eigen::VectorXd>(Eigen::MatrixXd(constant * Kb).data(), neq);
    for (std::size_t k = 0; k < vars.size(); ++k) {
        Eigen::MatrixXd MK = by_var[vars[k]] * Kb;
        E.col(static_cast<int>(k)) = Eigen::Map<Eigen::VectorXd>(MK.data(), neq);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(E.transpose());
    qr.setThreshold(1e-9);
    const int rank = static_cast<int>(qr.rank());
    for (int t = 0; t < rank; ++t) {
        int row = qr.colsPermutation().indices()(t);
        std::vector<std::pair<int, double>> coeffs;
        for (std::size_t k = 0; k < vars.size(); ++k)
            if (std::abs(E(row, static_cast<int>(k))) > 1e-14) coeffs.emplace_back(vars[k], E(row, static_cast<int>(k)));
        P.add_equality(coeffs, rhs(row));
    }
}

}  // namespace

namespace {

NegativityBound solve_negativity(const ProbabilityTable& p, const MomentStructure& ms, const SdpOptions& opt) {
    auto g = p.cg();

    SdpProblem P;
    std::vector<ClassSource> chi(ms.classes.size()), minus(ms.classes.size());
    for (int v = 0; v < ms.num_free; ++v) P.add_var();
    for (std::size_t k = 0; k < ms.classes.size(); ++k) {
        const auto& mc = ms.classes[k];
        if (mc.kind == MomentClass::One) chi[k].value = 1.0;
        else if (mc.kind == MomentClass::Data) chi[k].value = g[mc.index];
        else chi[k].var = mc.index;
        minus[k].var = P.add_var();
    }
    const int n = ms.size();
    auto kernel = forced_kernel(ms, p, 1e-10);
    if (kernel.cols() > 0) add_reduced_chi(P, ms, chi, kernel);
    else add_chi(P, P.add_block(n), ms, chi);
    add_chi(P, P.add_block(n), ms, minus);
    int mix = P.add_block(n);
    add_chi(P, mix, ms, chi, true);
    add_chi(P, mix, ms, minus);
    const int trace_var = minus[ms.cls(0, 0)].var;
    P.set_objective(trace_var, -1.0);

    auto sol = sdp_solve(P, opt);
    require(sol, "negativity bound");
    NegativityBound out;
    out.value = std::max(0.0, -sol.objective);
    out.solver = summarize(sol);
    return out;
}

}  // namespace

NegativityBound di_negativity_bound(const ProbabilityTable& p, MomentLevel level, const SdpOptions& opt) {
    if (level != MomentLevel::Local1PPT) throw ValidationError("negativity bounds need a level with PPT constraints");
    if (!check_nonsignaling(p, 1e-7))
        throw ValidationError("signaling table: project it with nearest_quantum_correlation first");
    auto ms = build_structure(p.scenario(), level);
    // The bound is convex in p and vanishes on the uniform table, so the bound of
    // (1 - e) p + e uniform is still a lower bound for p. Used when p sits on the
    // boundary of the relaxation and chi >= 0 has no interior.
    std::string last;
    for (double e : {0.0, 1e-7, 1e-6, 1e-5, 1e-4}) {
        try {
            auto out = solve_negativity(e == 0.0 ? p : mix_with_white_noise(p, 1.0 - e), ms, opt);
            out.noise = e;
            return out;
        } catch (const SolverError& err) {
            last = err.what();
        }
    }
    throw SolverError(last);
}

NegativityBound di_negativity_bound_from_value(const BellFunctional& f, double value, MomentLevel level,
                                               const SdpOptions& opt) {
    if (level != MomentLevel::Local1PPT) throw ValidationError("negativity bounds need a level with PPT constraints");
    double offset = 0.0;
    auto beta = cg_coefficients(f, offset);
    const Scenario& s = f.scenario;
    auto ms = build_structure(s, level);
    const int ng = static_cast<int>(s.cg_dimension());

    SdpProblem P;
    for (int k = 0; k < ng; ++k) P.add_var();
    const int u_off = P.num_vars();
    for (int v = 0; v < ms.num_free; ++v) P.add_var();
    auto chi = variable_sources(ms, 0, u_off);
    std::vector<ClassSource> minus(ms.classes.size());
    for (auto& m : minus) m.var = P.add_var();
    const int n = ms.size();
    add_chi(P, P.add_block(n), ms, chi);
    add_chi(P, P.add_block(n), ms, minus);
    int mix = P.add_block(n);
    add_chi(P, mix, ms, chi, true);
    add_chi(P, mix, ms, minus);
    auto rows = full_point_map(s);
    int lp = P.add_block(static_cast<int>(rows.size()), BlockKind::Diagonal);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int d = static_cast<int>(i);
        if (rows[i].constant != 0.0) P.add_constant(lp, d, d, rows[i].constant);
        for (auto [k, w] : rows[i].terms) P.add_term(lp, static_cast<int>(k), d, d, w);
    }
    std::vector<std::pair<int, double>> eq;
    for (int k = 0; k < ng; ++k)
        if (beta[k] != 0.0) eq.emplace_back(k, beta[k]);
    P.add_equality(eq, value - offset);
    P.set_objective(minus[ms.cls(0, 0)].var, -1.0);

    auto sol = sdp_solve(P, opt);
    require(sol, "negativity bound");
    NegativityBound out;
    out.value = std::max(0.0, -sol.objective);
    out.solver = summarize(sol);
    return out;
}

}  // namespace bellscope
