#include "bellscope/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bellscope {

std::string to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::IterationLimit: return "iteration_limit";
    }
    return "unknown";
}

namespace {

// Basis inverse as an LU factor followed by eta columns.
class BasisFactor {
public:
    void refactor(const Eigen::MatrixXd& B) {
        lu_.compute(B);
        etas_.clear();
    }
    std::size_t updates() const { return etas_.size(); }

    // B^{-1} v
    Eigen::VectorXd ftran(const Eigen::VectorXd& v) const {
        Eigen::VectorXd z = lu_.solve(v);
        for (const auto& e : etas_) {
            double zr = z(e.row) / e.col(e.row);
            z -= zr * e.col;
            z(e.row) = zr;
        }
        return z;
    }
    // B^{-T} v
    Eigen::VectorXd btran(Eigen::VectorXd v) const {
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double s = v.dot(it->col) - v(it->row) * it->col(it->row);
            v(it->row) = (v(it->row) - s) / it->col(it->row);
        }
        return lu_.transpose().solve(v);
    }
    // column `row` of the basis replaced; w = B^{-1} a_entering
    void update(int row, const Eigen::VectorXd& w) { etas_.push_back({row, w}); }

private:
    struct Eta {
        int row;
        Eigen::VectorXd col;
    };
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    std::vector<Eta> etas_;
};

struct Simplex {
    const Eigen::MatrixXd& A;  // m x n, artificials appended as identity
    const Eigen::VectorXd& b;
    int n_real;
    std::vector<int> basis;
    std::vector<char> in_basis;
    BasisFactor F;
    Eigen::VectorXd xb;
    int iterations = 0;
    int degenerate_run = 0;
    const LpOptions& opt;

    Simplex(const Eigen::MatrixXd& A_, const Eigen::VectorXd& b_, int n_real_, const LpOptions& o)
        : A(A_), b(b_), n_real(n_real_), opt(o) {}

    void refactor() {
        Eigen::MatrixXd B(A.rows(), A.rows());
        for (int i = 0; i < static_cast<int>(basis.size()); ++i) B.col(i) = A.col(basis[i]);
        F.refactor(B);
        xb = F.ftran(b);
    }

    // maximize cost'x over the current phase. Returns false if unbounded.
    // Columns with allowed[j] == 0 never enter.
    LpStatus run(const Eigen::VectorXd& cost, const std::vector<char>& allowed) {
        const int m = static_cast<int>(A.rows());
        const int n = static_cast<int>(A.cols());
        refactor();
        while (true) {
            if (iterations >= opt.max_iterations) return LpStatus::IterationLimit;
            Eigen::VectorXd cb(m);
            for (int i = 0; i < m; ++i) cb(i) = cost(basis[i]);
            Eigen::VectorXd y = F.btran(cb);
            // Dantzig pricing; Bland's lowest index rule after a run of degenerate pivots
            const bool bland = degenerate_run >= 30;
            int enter = -1;
            double dbest = 0.0;
            for (int j = 0; j < n; ++j) {
                if (in_basis[j] || !allowed[j]) continue;
                double d = cost(j) - A.col(j).dot(y);
                if (d <= opt.tol * (1.0 + std::abs(cost(j)))) continue;
                if (bland) {
                    enter = j;
                    break;
                }
                double score = d / (1.0 + A.col(j).norm());
                if (score > dbest) {
                    dbest = score;
                    enter = j;
                }
            }
            if (enter < 0) return LpStatus::Optimal;
            Eigen::VectorXd w = F.ftran(A.col(enter));
            int leave = ratio_test(w);
            if (leave < 0) return LpStatus::Unbounded;
            pivot(leave, enter, w);
        }
    }

    // Harris two-pass test: bound the step with a small feasibility slack, then
    // take a large pivot among the rows that block it, lowest basic index on ties.
    int ratio_test(const Eigen::VectorXd& w) const {
        const int m = static_cast<int>(w.size());
        const double piv = 1e-9, slack = 1e-9;
        double theta = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i)
            if (w(i) > piv) theta = std::min(theta, (std::max(xb(i), 0.0) + slack) / w(i));
        if (!std::isfinite(theta)) return -1;
        double wmax = 0.0;
        for (int i = 0; i < m; ++i)
            if (w(i) > piv && std::max(xb(i), 0.0) / w(i) <= theta) wmax = std::max(wmax, w(i));
        int leave = -1;
        for (int i = 0; i < m; ++i)
            if (w(i) >= 0.1 * wmax && std::max(xb(i), 0.0) / w(i) <= theta)
                if (leave < 0 || basis[i] < basis[leave]) leave = i;
        return leave;
    }

    void pivot(int leave, int enter, const Eigen::VectorXd& w) {
        double step = std::max(xb(leave), 0.0) / w(leave);
        degenerate_run = step > 1e-12 ? 0 : degenerate_run + 1;
        in_basis[basis[leave]] = 0;
        basis[leave] = enter;
        in_basis[enter] = 1;
        ++iterations;
        if (static_cast<int>(F.updates()) + 1 >= opt.refactor_every) {
            refactor();
        } else {
            F.update(leave, w);
            xb = F.ftran(b);
        }
    }
};

}  // namespace

LpSolution lp_solve(const LpProblem& lp, const LpOptions& opt) {
    const int m = static_cast<int>(lp.A.rows());
    const int n0 = static_cast<int>(lp.A.cols());
    if (lp.c.size() != n0 || lp.b.size() != m)
        throw ValidationError("LP dimensions do not agree");
    if (!lp.free_vars.empty() && static_cast<int>(lp.free_vars.size()) != n0)
        throw ValidationError("LP free-variable mask has the wrong length");

    // split free columns, flip rows to get b >= 0, append artificials
    std::vector<int> origin;
    std::vector<double> sign;
    for (int j = 0; j < n0; ++j) {
        origin.push_back(j);
        sign.push_back(1.0);
        if (!lp.free_vars.empty() && lp.free_vars[j]) {
            origin.push_back(j);
            sign.push_back(-1.0);
        }
    }
    const int nr = static_cast<int>(origin.size());
    Eigen::VectorXd rsign = Eigen::VectorXd::Ones(m);
    for (int i = 0; i < m; ++i)
        if (lp.b(i) < 0) rsign(i) = -1.0;
    Eigen::MatrixXd A(m, nr + m);
    Eigen::VectorXd cost(nr + m);
    for (int k = 0; k < nr; ++k) {
        A.col(k) = sign[k] * rsign.cwiseProduct(lp.A.col(origin[k]));
        cost(k) = sign[k] * lp.c(origin[k]);
    }
    A.rightCols(m).setIdentity();
    cost.tail(m).setZero();
    Eigen::VectorXd b = rsign.cwiseProduct(lp.b);

    Simplex sx(A, b, nr, opt);
    sx.basis.resize(m);
    sx.in_basis.assign(nr + m, 0);
    for (int i = 0; i < m; ++i) {
        sx.basis[i] = nr + i;
        sx.in_basis[nr + i] = 1;
    }

    LpSolution sol;
    const double scale = 1.0 + b.lpNorm<Eigen::Infinity>();

    // phase I
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(nr + m);
    c1.tail(m).setConstant(-1.0);
    std::vector<char> allowed(nr + m, 1);
    LpStatus st = sx.run(c1, allowed);
    if (st == LpStatus::IterationLimit) {
        sol.status = st;
        sol.iterations = sx.iterations;
        return sol;
    }
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
        if (sx.basis[i] >= nr) infeas += std::max(sx.xb(i), 0.0);
    if (infeas > 1e-7 * scale) {
        sol.status = LpStatus::Infeasible;
        sol.iterations = sx.iterations;
        return sol;
    }
    // drive zero artificials out where possible; rows left behind are redundant
    for (int i = 0; i < m; ++i) {
        if (sx.basis[i] < nr) continue;
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
        e(i) = 1.0;
        Eigen::VectorXd r = sx.F.btran(e);
        int best = -1;
        double bv = 1e-7;
        for (int j = 0; j < nr; ++j) {
            if (sx.in_basis[j]) continue;
            double v = std::abs(A.col(j).dot(r));
            if (v > bv) {
                bv = v;
                best = j;
            }
        }
        if (best >= 0) {
            Eigen::VectorXd w = sx.F.ftran(A.col(best));
            sx.pivot(i, best, w);
        }
    }
    for (int j = nr; j < nr + m; ++j) allowed[j] = 0;

    // phase II
    st = sx.run(cost, allowed);
    sol.iterations = sx.iterations;
    if (st != LpStatus::Optimal) {
        sol.status = st;
        return sol;
    }
    sx.refactor();
    Eigen::VectorXd xs = Eigen::VectorXd::Zero(nr + m);
    for (int i = 0; i < m; ++i) xs(sx.basis[i]) = std::max(sx.xb(i), 0.0);
    Eigen::VectorXd cb(m);
    for (int i = 0; i < m; ++i) cb(i) = cost(sx.basis[i]);
    Eigen::VectorXd ys = sx.F.btran(cb);

    sol.status = LpStatus::Optimal;
    sol.x = Eigen::VectorXd::Zero(n0);
    for (int k = 0; k < nr; ++k) sol.x(origin[k]) += sign[k] * xs(k);
    sol.y = rsign.cwiseProduct(ys);
    sol.objective = lp.c.dot(sol.x);
    sol.dual_objective = lp.b.dot(sol.y);
    sol.duality_gap = std::abs(sol.objective - sol.dual_objective);
    sol.primal_residual = (lp.A * sol.x - lp.b).lpNorm<Eigen::Infinity>();
    Eigen::VectorXd red = lp.A.transpose() * sol.y - lp.c;
    double dinf = 0.0;
    for (int j = 0; j < n0; ++j) {
        bool fr = !lp.free_vars.empty() && lp.free_vars[j];
        dinf = std::max(dinf, fr ? std::abs(red(j)) : std::max(0.0, -red(j)));
    }
    sol.dual_infeasibility = dinf;
    return sol;
}

namespace {

// Integer direction with the same sign pattern, if the entries are near-rational.
std::optional<std::vector<double>> integer_direction(const std::vector<double>& c) {
    double cmax = 0.0;
    for (double v : c) cmax = std::max(cmax, std::abs(v));
    if (cmax == 0.0) return std::nullopt;
    double cmin = cmax;
    for (double v : c)
        if (std::abs(v) > 1e-9 * cmax) cmin = std::min(cmin, std::abs(v));
    std::int64_t den = 1;
    std::vector<std::pair<std::int64_t, std::int64_t>> fr;
    for (double v : c) {
        double r = std::abs(v) > 1e-9 * cmax ? v / cmin : 0.0;
        auto pq = rationalize(r, 10000);
        if (std::abs(r - static_cast<double>(pq.first) / pq.second) > 1e-7 * std::max(1.0, std::abs(r)))
            return std::nullopt;
        fr.push_back(pq);
        den = std::lcm(den, pq.second);
        if (den > 100000000) return std::nullopt;
    }
    std::vector<std::int64_t> num;
    std::int64_t g = 0;
    for (auto [p, q] : fr) {
        num.push_back(p * (den / q));
        g = std::gcd(g, std::abs(num.back()));
    }
    std::vector<double> out;
    for (auto v : num) out.push_back(static_cast<double>(v / g));
    return out;
}

}  // namespace

VisibilityResult visibility_wrt_local_set(const ProbabilityTable& p) {
    const Scenario& s = p.scenario();
    if (!check_nonsignaling(p, 1e-9))
        throw ValidationError("table is signaling (max delta " + std::to_string(signaling_deltas(p).max_delta) +
                              "); project it first with nearest_quantum_correlation");
    const int d = static_cast<int>(s.cg_dimension());
    const int nv = static_cast<int>(s.num_vertices());
    auto gG = p.cg();
    auto gU = ProbabilityTable::uniform(s).cg();

    LpProblem lp;
    lp.A = Eigen::MatrixXd::Zero(d + 1, nv + 1);
    lp.b = Eigen::VectorXd::Zero(d + 1);
    lp.c = Eigen::VectorXd::Zero(nv + 1);
    lp.c(0) = 1.0;
    for (int k = 0; k < d; ++k) {
        lp.A(k, 0) = gG[k] - gU[k];
        lp.b(k) = -gU[k];
    }
    for (int i = 0; i < nv; ++i) {
        auto v = vertex_cg(s, vertex_at(s, i));
        for (int k = 0; k < d; ++k) lp.A(k, i + 1) = -v[k];
        lp.A(d, i + 1) = 1.0;
    }
    lp.b(d) = 1.0;

    VisibilityResult r;
    r.lp = lp_solve(lp);
    if (r.lp.status == LpStatus::Unbounded) {
        r.v_cr = 1.0;
        return r;
    }
    if (r.lp.status != LpStatus::Optimal) throw SolverError("visibility LP ended with status " + to_string(r.lp.status));
    r.v_cr = std::min(1.0, r.lp.objective);
    if (r.lp.objective >= 1.0 - 1e-9) {
        r.v_cr = 1.0;
        return r;
    }
    r.nonlocal = true;

    // dual: f = y[0..d), local bound y[d]
    std::vector<double> f(r.lp.y.data(), r.lp.y.data() + d);
    BellFunctional cert;
    cert.scenario = s;
    cert.form = Form::CG;
    bool done = false;
    if (auto dir = integer_direction(f)) {
        cert.coefficients = *dir;
        auto lb = local_bound_max(cert);
        cert.local_max = lb.value;
        done = evaluate(cert, p) > lb.value + 1e-9;
    }
    if (!done) {
        double viol = 0.0;
        for (int k = 0; k < d; ++k) viol += f[k] * gG[k];
        viol -= r.lp.y(d);
        for (double& v : f) v /= viol;
        cert.coefficients = f;
        cert.local_max = local_bound_max(cert).value;
    }
    r.certificate = cert;
    r.certificate_value = evaluate(cert, p);
    return r;
}

double visibility_wrt_inequality(const ProbabilityTable& p, const BellFunctional& f) {
    double L = f.local_max ? *f.local_max : local_bound_max(f).value;
    double sG = evaluate(f, p);
    double sU = evaluate(f, ProbabilityTable::uniform(p.scenario()));
    if (sG <= L) return 1.0;
    return (L - sU) / (sG - sU);
}

FacetCertificate facet_from_correlation(const ProbabilityTable& p) {
    VisibilityResult v = visibility_wrt_local_set(p);
    if (!v.nonlocal) throw ValidationError("table is local; there is no violated facet to extract");
    FacetCertificate fc;
    fc.functional = v.certificate;
    fc.face = face_analysis(v.certificate, Side::Max);
    fc.visibility = v.v_cr;
    fc.violation = v.certificate_value - *v.certificate.local_max;
    return fc;
}

}  // namespace bellscope
