#include "bellscope/polytope.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bellscope/parallel.hpp"

namespace bellscope {

std::vector<DeterministicVertex> enumerate_vertices(const Scenario& s, std::size_t cap) {
    std::size_t n = s.num_vertices();
    if (n > cap) throw ValidationError("scenario has " + std::to_string(n) + " vertices, above the cap of " + std::to_string(cap));
    std::vector<DeterministicVertex> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(vertex_at(s, i));
    return out;
}

DeterministicVertex vertex_at(const Scenario& s, std::size_t index) {
    DeterministicVertex v;
    v.out_a.resize(s.inputs_a());
    v.out_b.resize(s.inputs_b());
    for (int y = s.inputs_b() - 1; y >= 0; --y) {
        v.out_b[y] = static_cast<int>(index % s.outputs_b(y));
        index /= s.outputs_b(y);
    }
    for (int x = s.inputs_a() - 1; x >= 0; --x) {
        v.out_a[x] = static_cast<int>(index % s.outputs_a(x));
        index /= s.outputs_a(x);
    }
    return v;
}

std::vector<double> vertex_cg(const Scenario& s, const DeterministicVertex& v) {
    std::vector<double> g(s.cg_dimension(), 0.0);
    for (int x = 0; x < s.inputs_a(); ++x)
        if (v.out_a[x] + 1 < s.outputs_a(x)) g[s.cg_alice(x, v.out_a[x])] = 1.0;
    for (int y = 0; y < s.inputs_b(); ++y) {
        if (v.out_b[y] + 1 >= s.outputs_b(y)) continue;
        g[s.cg_bob(y, v.out_b[y])] = 1.0;
        for (int x = 0; x < s.inputs_a(); ++x)
            if (v.out_a[x] + 1 < s.outputs_a(x)) g[s.cg_joint(x, v.out_a[x], y, v.out_b[y])] = 1.0;
    }
    return g;
}

std::pair<std::int64_t, std::int64_t> rationalize(double v, std::int64_t max_den) {
    // continued fraction convergents
    double x = v;
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int it = 0; it < 64; ++it) {
        double fl = std::floor(x);
        if (std::abs(fl) > 1e15) break;
        auto a = static_cast<std::int64_t>(fl);
        std::int64_t p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double frac = x - fl;
        if (frac < 1e-15) break;
        x = 1.0 / frac;
    }
    if (q1 == 0) return {static_cast<std::int64_t>(std::llround(v)), 1};
    return {p1, q1};
}

std::optional<std::int64_t> common_denominator(const std::vector<double>& values, std::int64_t max_den,
                                               std::int64_t max_lcm) {
    std::int64_t d = 1;
    for (double v : values) {
        if (!std::isfinite(v) || std::abs(v) > 1e12) return std::nullopt;
        auto [p, q] = rationalize(v, max_den);
        if (std::abs(v - static_cast<double>(p) / q) > 1e-12 * std::max(1.0, std::abs(v))) return std::nullopt;
        d = std::lcm(d, q);
        if (d > max_lcm) return std::nullopt;
    }
    return d;
}

namespace {

struct Evaluator {
    const Scenario& s;
    std::vector<double> alpha;
    double offset;

    explicit Evaluator(const BellFunctional& f) : s(f.scenario) {
        f.validate();
        BellFunctional full = full_from_cg(f);
        alpha = full.coefficients;
        offset = full.offset;
    }
};

template <class T>
T vertex_value(const Scenario& s, const std::vector<T>& alpha, T offset, const DeterministicVertex& v) {
    T sum = offset;
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int y = 0; y < s.inputs_b(); ++y) sum += alpha[s.full_index(x, y, v.out_a[x], v.out_b[y])];
    return sum;
}

}  // namespace

std::vector<double> vertex_values(const BellFunctional& f) {
    Evaluator ev(f);
    std::size_t n = f.scenario.num_vertices();
    std::vector<double> out(n);
    parallel_for(n, [&](std::size_t i) { out[i] = vertex_value(ev.s, ev.alpha, ev.offset, vertex_at(ev.s, i)); });
    return out;
}

BoundResult local_bound(const BellFunctional& f, Side side) {
    Evaluator ev(f);
    const Scenario& s = f.scenario;
    std::size_t n = s.num_vertices();
    BoundResult r;
    std::vector<double> all = ev.alpha;
    all.push_back(ev.offset);
    if (auto den = common_denominator(all)) {
        std::vector<std::int64_t> ia(ev.alpha.size());
        for (std::size_t k = 0; k < ia.size(); ++k) ia[k] = std::llround(ev.alpha[k] * static_cast<double>(*den));
        std::int64_t ioff = std::llround(ev.offset * static_cast<double>(*den));
        std::vector<std::int64_t> vals(n);
        parallel_for(n, [&](std::size_t i) { vals[i] = vertex_value(s, ia, ioff, vertex_at(s, i)); });
        std::int64_t best = side == Side::Max ? *std::max_element(vals.begin(), vals.end())
                                              : *std::min_element(vals.begin(), vals.end());
        for (std::size_t i = 0; i < n; ++i)
            if (vals[i] == best) r.saturating.push_back(i);
        r.value = static_cast<double>(best) / static_cast<double>(*den);
        r.exact = true;
        return r;
    }
    std::vector<double> vals = vertex_values(f);
    double best = side == Side::Max ? *std::max_element(vals.begin(), vals.end())
                                    : *std::min_element(vals.begin(), vals.end());
    double scale = std::abs(ev.offset);
    for (double a : ev.alpha) scale += std::abs(a);
    double tol = 1e-9 * std::max(1.0, scale);
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(vals[i] - best) <= tol) r.saturating.push_back(i);
    r.value = best;
    return r;
}

FaceAnalysis face_analysis(const BellFunctional& f, Side side) {
    BoundResult b = local_bound(f, side);
    const Scenario& s = f.scenario;
    FaceAnalysis fa;
    fa.side = side;
    fa.bound = b.value;
    fa.saturating = b.saturating;
    const std::size_t dim = s.cg_dimension();
    const std::size_t k = b.saturating.size();
    auto v0 = vertex_cg(s, vertex_at(s, b.saturating[0]));
    int rank = 0;
    if (k > 1) {
        Eigen::MatrixXd D(k - 1, dim);
        for (std::size_t i = 1; i < k; ++i) {
            auto vi = vertex_cg(s, vertex_at(s, b.saturating[i]));
            for (std::size_t j = 0; j < dim; ++j) D(i - 1, j) = vi[j] - v0[j];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(D);
        lu.setThreshold(1e-10);
        rank = static_cast<int>(lu.rank());
    }
    fa.affine_dimension = rank;
    fa.spanned_dimension = rank + 1;
    fa.is_facet = rank == static_cast<int>(dim) - 1;
    return fa;
}

}  // namespace bellscope
