#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <tuple>

#include "bellscope/dataset.hpp"
#include "bellscope/errors.hpp"
#include "bellscope/io.hpp"
#include "bellscope/moment.hpp"
#include "bellscope/polytope.hpp"

using namespace bellscope;

namespace {

ProbabilityTable load(const std::string& name) {
    std::ifstream in(std::string(BELLSCOPE_TEST_DATA) + "/" + name);
    REQUIRE(in);
    return parse_correlation(in);
}

CMat random_pure(int D, std::mt19937_64& eng) {
    std::normal_distribution<double> nd;
    CVec v(D);
    for (int i = 0; i < D; ++i) v(i) = {nd(eng), nd(eng)};
    v.normalize();
    return v * v.adjoint();
}

CMat random_mixed(int D, std::mt19937_64& eng, int rank) {
    CMat rho = CMat::Zero(D, D);
    for (int k = 0; k < rank; ++k) rho += random_pure(D, eng);
    return rho / static_cast<double>(rank);
}

Realization random_projective(int da, int db, std::uint64_t seed, int rank = 1) {
    std::mt19937_64 eng(seed);
    Realization r;
    r.state = DensityMatrix(da, db, random_mixed(da * db, eng, rank));
    for (int x = 0; x < 3; ++x) r.povms_a.push_back(Povm::from_basis(haar_unitary(da, eng()), 3));
    for (int y = 0; y < 3; ++y) r.povms_b.push_back(Povm::from_basis(haar_unitary(db, eng()), 3));
    return r;
}

double min_eig(const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

// P(a,b|x,y) = 1/3 when b - a = xy mod 3: no-signaling, beyond the quantum set
ProbabilityTable chained_box() {
    Scenario s = Scenario::flagship();
    std::vector<double> p(s.full_dimension(), 0.0);
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y)
            for (int a = 0; a < 3; ++a) p[s.full_index(x, y, a, (a + x * y) % 3)] = 1.0 / 3.0;
    return ProbabilityTable(s, p);
}

}  // namespace

TEST_CASE("structure sizes and word lists") {
    Scenario s = Scenario::flagship();
    CHECK(build_structure(s, MomentLevel::Npa1).size() == 13);
    CHECK(build_structure(s, MomentLevel::Npa1AB).size() == 49);
    CHECK(build_structure(s, MomentLevel::Local1).size() == 49);
    CHECK(build_structure(s, MomentLevel::Local1PPT).size() == 49);
    CHECK(build_structure(s, MomentLevel::Npa2).size() == 97);
    for (auto lv : {MomentLevel::Npa1, MomentLevel::Npa1AB, MomentLevel::Npa2, MomentLevel::Local1PPT}) {
        auto ms = build_structure(s, lv);
        CHECK(ms.words.front().first.empty());
        CHECK(ms.words.front().second.empty());
        CHECK(ms.classes[ms.cls(0, 0)].kind == MomentClass::One);
        // every CG coordinate appears as exactly one data class
        std::multiset<int> data;
        for (const auto& c : ms.classes)
            if (c.kind == MomentClass::Data) data.insert(c.index);
        CHECK(data.size() == s.cg_dimension());
        CHECK(std::set<int>(data.begin(), data.end()).size() == s.cg_dimension());
        // supports are disjoint and cover the nonvanishing entries
        std::size_t covered = 0;
        for (std::size_t k = 0; k < ms.classes.size(); ++k) covered += ms.support(static_cast<int>(k)).size();
        std::size_t nonzero = 0;
        for (int r = 0; r < ms.size(); ++r)
            for (int c = r; c < ms.size(); ++c) nonzero += ms.cls(r, c) >= 0;
        CHECK(covered == nonzero);
        CHECK(to_string(lv) == to_string(parse_level(to_string(lv))));
    }
    CHECK(parse_level("Local1PPT") == MomentLevel::Local1PPT);
    CHECK_THROWS_AS(parse_level("local2"), ValidationError);
}

TEST_CASE("tensor indexing and partial transpose") {
    auto ms = build_structure(Scenario::flagship(), MomentLevel::Local1);
    // word I = 7 i + k with Alice word i, Bob word k
    CHECK(ms.words[8].first == Word{0});
    CHECK(ms.words[8].second == Word{0});
    CHECK(ms.words[6].first.empty());
    CHECK(ms.words[6].second == Word{5});
    REQUIRE(ms.partial_transpose.size() == 49u * 49u);
    std::vector<int> seen(49 * 49, 0);
    for (int e : ms.partial_transpose) ++seen[e];
    for (int c : seen) CHECK(c == 1);
    CHECK(build_structure(Scenario::flagship(), MomentLevel::Npa1).partial_transpose.empty());
}

TEST_CASE("exact moment matrices are feasible at every level") {
    for (int t = 0; t < 12; ++t) {
        int d = 2 + t % 2;
        auto r = random_projective(d, d, 900 + t, 1 + t % 3);
        auto g = correlation(r).cg();
        for (auto lv : {MomentLevel::Npa1, MomentLevel::Npa1AB, MomentLevel::Npa2, MomentLevel::Local1PPT}) {
            auto ms = build_structure(Scenario::flagship(), lv);
            auto chi = moment_matrix(r, ms);
            CHECK(min_eig(chi) > -1e-10);
            CHECK(consistent(ms, chi, g, 1e-10));
        }
    }
}

TEST_CASE("quantum upper bounds at Npa1AB") {
    // reference values from an independent conic solver
    struct Case {
        int row;
        double value;
    };
    for (auto c : {Case{1, 2.6972355}, Case{13, 2.6711713}, Case{14, 2.6972354}, Case{18, 1.4142135}, Case{19, 1.414863}}) {
        CAPTURE(c.row);
        auto q = quantum_bound(table1_row(c.row).functional, MomentLevel::Npa1AB, Side::Max);
        CHECK(q.value == doctest::Approx(c.value).epsilon(2e-6));
        CHECK(q.solver.status == SdpStatus::Optimal);
    }
    CHECK(quantum_upper_bound(table1_row(14).functional, MomentLevel::Npa1AB) ==
          doctest::Approx(2.6972).epsilon(5e-4 / 2.6972));
    CHECK(quantum_upper_bound(table1_row(18).functional, MomentLevel::Npa1AB) ==
          doctest::Approx(1.4142).epsilon(5e-4 / 1.4142));
    CHECK(quantum_bound(table1_row(14).functional, MomentLevel::Npa1AB, Side::Min).value ==
          doctest::Approx(-3.6972354).epsilon(1e-6));
    CHECK(quantum_bound(table1_row(19).functional, MomentLevel::Npa1AB, Side::Min).value ==
          doctest::Approx(-3.2071067).epsilon(1e-6));
}

TEST_CASE("rows without quantum violation on the min side") {
    int n = 0;
    for (const auto& rec : table1()) {
        if (!rec.quantum_min_is_local) continue;
        CAPTURE(rec.index);
        ++n;
        auto q = quantum_bound(rec.functional, MomentLevel::Npa1AB, Side::Min);
        CHECK(std::abs(q.value - local_bound_min(rec.functional).value) <= 1e-5);
    }
    CHECK(n > 0);
}

TEST_CASE("levels are monotone and bounds are sound") {
    const auto& f = table1_row(19).functional;
    double b1 = quantum_upper_bound(f, MomentLevel::Npa1);
    double bab = quantum_upper_bound(f, MomentLevel::Npa1AB);
    double bl = quantum_upper_bound(f, MomentLevel::Local1);
    double b2 = quantum_upper_bound(f, MomentLevel::Npa2);
    CHECK(bab <= b1 + 1e-7);
    CHECK(bl == doctest::Approx(bab).epsilon(1e-7));
    CHECK(b2 <= bab + 1e-7);
    CHECK(b2 == doctest::Approx(1.396640).epsilon(2e-6));
    for (int row : {3, 12, 19}) {
        const auto& g = table1_row(row).functional;
        double ub = quantum_upper_bound(g, MomentLevel::Npa1AB);
        SeesawOptions o;
        o.restarts = 4;
        CHECK(seesaw_maximize(g, 2, 2, o).value <= ub + 1e-7);
        // Npa1 is looser
        CHECK(ub <= quantum_upper_bound(g, MomentLevel::Npa1) + 1e-7);
        CHECK(ub >= local_bound_max(g).value - 1e-7);
    }
}

TEST_CASE("nearest quantum correlation of quantum tables") {
    auto r = random_projective(3, 3, 4242);
    auto q = correlation(r);
    auto res = nearest_quantum_correlation(q, MomentLevel::Npa1AB);
    CHECK(res.l1_distance <= 1e-6);
    for (std::size_t i = 0; i < q.entries().size(); ++i) CHECK(std::abs(res.table.entries()[i] - q.entries()[i]) < 1e-6);
    auto uni = nearest_quantum_correlation(ProbabilityTable::uniform(Scenario::flagship()), MomentLevel::Npa1);
    CHECK(uni.l1_distance <= 1e-6);
}

TEST_CASE("signaling perturbation is projected back") {
    auto q = correlation(random_projective(3, 3, 31));
    Scenario s = q.scenario();
    for (double eps : {1e-3, 1e-2}) {
        auto e = q.entries();
        double shift = std::min(eps, e[s.full_index(0, 0, 1, 0)]);
        e[s.full_index(0, 0, 0, 0)] += shift;
        e[s.full_index(0, 0, 1, 0)] -= shift;
        ProbabilityTable pert(s, e);
        CHECK_FALSE(check_nonsignaling(pert, 1e-7));
        auto res = nearest_quantum_correlation(pert, MomentLevel::Npa1AB);
        CHECK(res.l1_distance <= 2 * shift + 1e-6);
        CHECK(res.l1_distance >= shift - 1e-6);
        CHECK(check_nonsignaling(res.table, 1e-7));
    }
}

TEST_CASE("nearest distance vanishes exactly on feasible tables") {
    auto box = chained_box();
    auto res = nearest_quantum_correlation(box, MomentLevel::Npa1AB);
    CHECK(res.l1_distance > 0.1);
    CHECK(res.l1_distance == doctest::Approx(res.l1_stage_one).epsilon(1e-5));
    // the projection itself is feasible
    auto again = nearest_quantum_correlation(res.table, MomentLevel::Npa1AB);
    CHECK(again.l1_distance <= 1e-6);
    // deterministic tie-break
    auto twice = nearest_quantum_correlation(box, MomentLevel::Npa1AB);
    for (std::size_t i = 0; i < box.entries().size(); ++i)
        CHECK(std::abs(twice.table.entries()[i] - res.table.entries()[i]) < 1e-6);
}

TEST_CASE("pinned Bell value") {
    const auto& f = table1_row(14).functional;
    auto box = chained_box();
    double target = 2.5;
    auto res = nearest_quantum_correlation(box, MomentLevel::Npa1AB, std::make_pair(f, target));
    CHECK(std::abs(evaluate(f, res.table) - target) <= 1e-6);
    CHECK(check_nonsignaling(res.table, 1e-7));
    auto meta = res.metadata_json();
    CHECK(meta.find("\"level\": \"npa1ab\"") != std::string::npos);
    CHECK(meta.find("\"target\": 2.5") != std::string::npos);
    CHECK_THROWS_AS(nearest_quantum_correlation(box, MomentLevel::Npa1AB, std::make_pair(f, 10.0)), SolverError);
}

TEST_CASE("negativity bound on local tables") {
    Scenario s = Scenario::flagship();
    CHECK(std::abs(di_negativity_lower_bound(ProbabilityTable::uniform(s))) <= 1e-6);
    CHECK(std::abs(di_negativity_lower_bound(ProbabilityTable::deterministic(s, {0, 2, 1}, {1, 1, 0}))) <= 1e-6);
    auto mixed = mix_with_white_noise(ProbabilityTable::deterministic(s, {2, 0, 1}, {0, 1, 2}), 0.3);
    CHECK(std::abs(di_negativity_lower_bound(mixed)) <= 1e-6);
}

TEST_CASE("negativity bound on the i3plus optimum") {
    // reference values from an independent conic solver
    auto p = load("i3plus_optimal.txt");
    CHECK(di_negativity_lower_bound(p) == doctest::Approx(0.36522).epsilon(2e-5 / 0.36522));
}

TEST_CASE("negativity regression constant for the inequality 14 optimum") {
    auto p = load("i14_optimal.txt");
    double b = di_negativity_lower_bound(p);
    CHECK(b > 0.0);
    CHECK(b == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("negativity bound never exceeds the state negativity") {
    for (int t = 0; t < 8; ++t) {
        int d = 2 + t % 2;
        auto r = random_projective(d, d, 7000 + t, 1 + t % 2);
        double exact = negativity(r.state);
        double b = di_negativity_lower_bound(correlation(r));
        CAPTURE(t);
        CHECK(b <= exact + 1e-6);
        CHECK(b >= -1e-9);
    }
    // calibration: the maximally entangled qutrit and qubit states
    CVec phi3 = CVec::Zero(9);
    phi3(0) = phi3(4) = phi3(8) = 1.0 / std::sqrt(3.0);
    CHECK(negativity(DensityMatrix::pure(phi3, 3, 3)) == doctest::Approx(1.0));
    CVec phi2 = CVec::Zero(4);
    phi2(0) = phi2(3) = 1.0 / std::sqrt(2.0);
    CHECK(negativity(DensityMatrix::pure(phi2, 2, 2)) == doctest::Approx(0.5));
}

TEST_CASE("negativity bound input checks") {
    auto q = correlation(random_projective(3, 3, 5));
    auto e = q.entries();
    Scenario s = q.scenario();
    e[s.full_index(0, 0, 0, 0)] += 0.01;
    e[s.full_index(0, 0, 1, 0)] -= std::min(0.01, e[s.full_index(0, 0, 1, 0)]);
    CHECK_THROWS_AS(di_negativity_lower_bound(ProbabilityTable(s, e, 1e-2)), ValidationError);
    CHECK_THROWS_AS(di_negativity_lower_bound(q, MomentLevel::Npa1AB), ValidationError);
}

TEST_CASE("negativity from the Bell value alone") {
    // reference values from an independent conic solver
    auto p = load("i3plus_optimal.txt");
    auto f = i3plus();
    for (auto [v, full, bell] : {std::tuple{0.99, 0.31625, 0.307701}, std::tuple{0.95, 0.15433, 0.152728}}) {
        auto m = mix_with_white_noise(p, v);
        double b = di_negativity_bound_from_value(f, evaluate(f, m)).value;
        CHECK(b == doctest::Approx(bell).epsilon(2e-5 / bell));
        CHECK(b <= di_negativity_lower_bound(m) + 1e-7);
        CHECK(di_negativity_lower_bound(m) == doctest::Approx(full).epsilon(2e-5 / full));
    }
}
