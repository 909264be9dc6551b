#include "doctest.h"

#include <algorithm>
#include <random>

#include "bellscope/dataset.hpp"
#include "bellscope/polytope.hpp"

using namespace bellscope;

namespace {

// exact rank of an integer matrix by fraction-free elimination
int exact_rank(std::vector<std::vector<__int128>> m) {
    int rows = static_cast<int>(m.size());
    if (!rows) return 0;
    int cols = static_cast<int>(m[0].size());
    int r = 0;
    __int128 prev = 1;
    for (int c = 0; c < cols && r < rows; ++c) {
        int piv = -1;
        for (int i = r; i < rows; ++i)
            if (m[i][c] != 0) {
                piv = i;
                break;
            }
        if (piv < 0) continue;
        std::swap(m[r], m[piv]);
        for (int i = r + 1; i < rows; ++i) {
            for (int j = c + 1; j < cols; ++j) m[i][j] = (m[r][c] * m[i][j] - m[i][c] * m[r][j]) / prev;
            m[i][c] = 0;
        }
        prev = m[r][c];
        ++r;
    }
    return r;
}

const int kMin[19] = {-4, -4, -5, -5, -4, -4, -4, -4, -4, -5, -4, -3, -3, -3, -3, -1, -3, -2, -3};
const int kMax[19] = {2, 2, 2, 2, 2, 2, 2, 2, 2, 1, 2, 2, 2, 2, 1, 1, 1, 1, 1};
const int kSatMin[19] = {1, 1, 2, 2, 4, 4, 5, 5, 8, 9, 8, 8, 30, 31, 37, 54, 4, 22, 15};
const int kSatMax[19] = {102, 98, 105, 105, 102, 100, 100, 100, 103, 103, 102, 147, 98, 102, 141, 297, 213, 212, 123};
const int kSpanMin[19] = {1, 1, 2, 2, 4, 4, 5, 5, 6, 7, 8, 8, 26, 27, 29, 30, 4, 16, 13};

}  // namespace

TEST_CASE("vertex enumeration") {
    Scenario s = Scenario::flagship();
    auto vs = enumerate_vertices(s);
    CHECK(vs.size() == 729);
    CHECK(vs[0].out_a == std::vector<int>{0, 0, 0});
    CHECK(vs[1].out_b == std::vector<int>{0, 0, 1});
    CHECK(vs[728].out_a == std::vector<int>{2, 2, 2});
    CHECK_THROWS_AS(enumerate_vertices(s, 100), ValidationError);
    // cg coordinates of a vertex are 0/1 and reproduce the deterministic table
    auto v = vs[417];
    auto p = ProbabilityTable::deterministic(s, v.out_a, v.out_b);
    CHECK(vertex_cg(s, v) == p.cg());
}

TEST_CASE("local bounds of every catalogue row") {
    for (int n = 1; n <= 19; ++n) {
        CAPTURE(n);
        const auto& f = table1_row(n).functional;
        auto mx = local_bound_max(f);
        auto mn = local_bound_min(f);
        CHECK(mx.exact);
        CHECK(mx.value == kMax[n - 1]);
        CHECK(mn.value == kMin[n - 1]);
        CHECK(mx.value == *f.local_max);
        CHECK(mn.value == *f.local_min);
        CHECK(static_cast<int>(mx.saturating.size()) == kSatMax[n - 1]);
        CHECK(static_cast<int>(mn.saturating.size()) == kSatMin[n - 1]);
    }
}

TEST_CASE("bound is invariant under full and cg forms") {
    for (int n : {3, 12, 19}) {
        const auto& f = table1_row(n).functional;
        auto full = full_from_cg(f);
        CHECK(local_bound_max(full).value == local_bound_max(f).value);
        CHECK(local_bound_min(full).value == local_bound_min(f).value);
        CHECK(local_bound_max(full).saturating == local_bound_max(f).saturating);
    }
}

TEST_CASE("max sides are facets and min sides match the reported dimensions") {
    for (int n = 1; n <= 19; ++n) {
        CAPTURE(n);
        const auto& f = table1_row(n).functional;
        auto fmax = face_analysis(f, Side::Max);
        CHECK(fmax.is_facet);
        CHECK(fmax.affine_dimension == 47);
        auto fmin = face_analysis(f, Side::Min);
        CHECK(fmin.spanned_dimension == kSpanMin[n - 1]);
        CHECK(fmin.spanned_dimension == table1_row(n).reported_d_min);
    }
    auto f13 = face_analysis(table1_row(13).functional, Side::Min);
    CHECK(f13.affine_dimension == 25);
}

TEST_CASE("face rank agrees with exact integer rank") {
    Scenario s = Scenario::flagship();
    for (int n : {9, 13, 16, 18, 19}) {
        for (Side side : {Side::Max, Side::Min}) {
            auto fa = face_analysis(table1_row(n).functional, side);
            auto v0 = vertex_cg(s, vertex_at(s, fa.saturating[0]));
            std::vector<std::vector<__int128>> m;
            for (std::size_t i = 1; i < fa.saturating.size(); ++i) {
                auto vi = vertex_cg(s, vertex_at(s, fa.saturating[i]));
                std::vector<__int128> row;
                for (std::size_t k = 0; k < vi.size(); ++k) row.push_back(static_cast<__int128>(vi[k] - v0[k]));
                m.push_back(row);
            }
            CHECK(exact_rank(m) == fa.affine_dimension);
        }
    }
}

TEST_CASE("every vertex respects the bounds") {
    for (int n = 1; n <= 19; ++n) {
        const auto& f = table1_row(n).functional;
        auto vals = vertex_values(f);
        CHECK(*std::max_element(vals.begin(), vals.end()) == *f.local_max);
        CHECK(*std::min_element(vals.begin(), vals.end()) == *f.local_min);
    }
}

TEST_CASE("non-integer functionals use the float path with tolerance") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    BellFunctional f;
    f.coefficients.resize(48);
    for (double& c : f.coefficients) c = g(rng);
    auto b = local_bound_max(f);
    CHECK_FALSE(b.exact);
    auto vals = vertex_values(f);
    CHECK(b.value == *std::max_element(vals.begin(), vals.end()));
    CHECK(b.saturating.size() == 1);
}

TEST_CASE("rational detection") {
    auto pq = rationalize(2.0 / 3.0, 10000);
    CHECK(pq.first == 2);
    CHECK(pq.second == 3);
    CHECK(common_denominator({0.5, 1.0 / 3, 0.25}) == 12);
    CHECK_FALSE(common_denominator({std::sqrt(2.0)}).has_value());
}

TEST_CASE("smaller scenarios") {
    // CHSH in CG form: p(00|00)+p(00|01)+p(00|10)-p(00|11)-pA(0|0)-pB(0|0), local max 0
    Scenario s = Scenario::uniform(2, 2, 2);
    BellFunctional f;
    f.scenario = s;
    f.coefficients.assign(s.cg_dimension(), 0.0);
    f.coefficients[s.cg_alice(0, 0)] = -1;
    f.coefficients[s.cg_bob(0, 0)] = -1;
    f.coefficients[s.cg_joint(0, 0, 0, 0)] = 1;
    f.coefficients[s.cg_joint(0, 0, 1, 0)] = 1;
    f.coefficients[s.cg_joint(1, 0, 0, 0)] = 1;
    f.coefficients[s.cg_joint(1, 0, 1, 0)] = -1;
    CHECK(local_bound_max(f).value == 0);
    auto fa = face_analysis(f, Side::Max);
    CHECK(fa.is_facet);
    CHECK(fa.affine_dimension == 7);
}
