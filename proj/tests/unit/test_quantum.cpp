#include "doctest.h"

#include <cmath>
#include <random>

#include "bellscope/dataset.hpp"
#include "bellscope/errors.hpp"
#include "bellscope/io.hpp"
#include "bellscope/quantum.hpp"

using namespace bellscope;

namespace {

CMat random_state(int D, std::mt19937_64& eng, int rank) {
    std::normal_distribution<double> nd;
    CMat G(D, rank);
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < rank; ++j) G(i, j) = {nd(eng), nd(eng)};
    CMat rho = G * G.adjoint();
    rho /= rho.trace().real();
    return 0.5 * (rho + rho.adjoint());
}

Realization random_realization(int da, int db, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    Realization r;
    r.state = DensityMatrix(da, db, random_state(da * db, eng, 1 + static_cast<int>(eng() % 3)));
    for (int x = 0; x < 3; ++x) r.povms_a.push_back(Povm::from_basis(haar_unitary(da, eng()), 3));
    for (int y = 0; y < 3; ++y) r.povms_b.push_back(Povm::from_basis(haar_unitary(db, eng()), 3));
    return r;
}

}  // namespace

TEST_CASE("density matrix validation") {
    CMat m = CMat::Identity(4, 4) / 4.0;
    CHECK_NOTHROW(DensityMatrix(2, 2, m));
    CHECK_THROWS_AS(DensityMatrix(2, 3, m), ValidationError);
    CMat bad = m;
    bad(0, 0) += 0.1;
    CHECK_THROWS_AS(DensityMatrix(2, 2, bad), ValidationError);
    CMat neg = CMat::Zero(4, 4);
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityMatrix(2, 2, neg), ValidationError);
    CMat herm = m;
    herm(0, 1) = {0.0, 0.1};
    CHECK_THROWS_AS(DensityMatrix(2, 2, herm), ValidationError);
}

TEST_CASE("povm validation and projective flag") {
    Povm p = Povm::from_basis(CMat::Identity(3, 3), 3);
    CHECK_NOTHROW(p.validate());
    CHECK(p.projective());
    Povm trine;
    for (int k = 0; k < 3; ++k) {
        double t = 2.0 * M_PI * k / 3.0;
        CVec v(2);
        v << std::cos(t / 2), std::sin(t / 2);
        trine.elements.push_back(2.0 / 3.0 * v * v.adjoint());
    }
    CHECK_NOTHROW(trine.validate());
    CHECK_FALSE(trine.projective());
    Povm incomplete({CMat::Identity(2, 2) * 0.5});
    CHECK_THROWS_AS(incomplete.validate(), ValidationError);
}

TEST_CASE("psi_gamma family and negativity") {
    CHECK(negativity(psi_gamma(1, 1)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(negativity(psi_gamma(1, 0)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(negativity(psi_gamma(0, 0)) == doctest::Approx(0.0));
    DensityMatrix phi3 = psi_gamma(1, 1);
    CHECK(phi3.matrix(0, 8).real() == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(psi_gamma(-1, 0), ValidationError);
    // pure state negativity is ((sum of Schmidt coefficients)^2 - 1) / 2
    double g = 0.6, gp = 0.3, n = std::sqrt(1 + g * g + gp * gp);
    double s = (1 + g + gp) / n;
    CHECK(negativity(psi_gamma(g, gp)) == doctest::Approx((s * s - 1) / 2).epsilon(1e-12));
}

TEST_CASE("negativity formulas agree and vanish on separable states") {
    std::mt19937_64 eng(11);
    for (int t = 0; t < 40; ++t) {
        int da = 2 + static_cast<int>(eng() % 2), db = 2 + static_cast<int>(eng() % 2);
        DensityMatrix rho(da, db, random_state(da * db, eng, 1 + static_cast<int>(eng() % 4)));
        CMat pt = partial_transpose_b(rho.matrix, da, db);
        Eigen::SelfAdjointEigenSolver<CMat> es(pt);
        double neg_sum = 0.0;
        for (int i = 0; i < pt.rows(); ++i) neg_sum += std::max(0.0, -es.eigenvalues()(i));
        CHECK(std::abs(negativity(rho) - neg_sum) < 1e-12);
    }
    for (int t = 0; t < 20; ++t) {
        // mixture of product states
        CMat sep = CMat::Zero(9, 9);
        for (int k = 0; k < 4; ++k) {
            CMat a = random_state(3, eng, 1), b = random_state(3, eng, 2);
            CMat prod(9, 9);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) prod.block(3 * i, 3 * j, 3, 3) = a(i, j) * b;
            sep += 0.25 * prod;
        }
        sep = 0.5 * (sep + sep.adjoint());
        CHECK(negativity(DensityMatrix(3, 3, sep)) < 1e-12);
    }
}

TEST_CASE("correlation of the maximally mixed state") {
    Realization r = random_realization(3, 3, 5);
    r.state = DensityMatrix::maximally_mixed(3, 3);
    auto p = correlation(r);
    for (double v : p.entries()) CHECK(v == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("correlations are normalized and non-signaling") {
    for (int t = 0; t < 20; ++t) {
        Realization r = random_realization(2 + t % 2, 2 + (t / 2) % 2, 100 + t);
        auto p = correlation(r);
        CHECK(signaling_deltas(p).max_delta < 1e-12);
        const auto& s = p.scenario();
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y) {
                double tot = 0.0;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) tot += p(x, y, a, b);
                CHECK(std::abs(tot - 1.0) < 1e-14);
            }
        CHECK(evaluate(i3plus(), p) == doctest::Approx(bell_value(i3plus(), r)).epsilon(1e-12));
        CHECK(s == Scenario::flagship());
    }
}

TEST_CASE("reference realization for inequality 12") {
    Realization r = reference_i12_realization();
    const auto& f12 = table1_row(12).functional;
    double v = evaluate(f12, correlation(r));
    CHECK(std::abs(v - 2.5820) < 2e-3);
    for (const auto& p : r.povms_a) CHECK(p.projective());
    for (const auto& p : r.povms_b) CHECK(p.projective());

    Realization q;
    CVec psi = CVec::Zero(4);
    psi(0) = 0.7258;
    psi(3) = 0.6879;
    q.state = DensityMatrix::pure(psi, 2, 2);
    for (const auto& p : r.povms_a) q.povms_a.push_back(project_povm_to_subspace(p));
    for (const auto& p : r.povms_b) q.povms_b.push_back(project_povm_to_subspace(p));
    CHECK_NOTHROW(q.validate());
    double vq = evaluate(f12, correlation(q));
    CHECK(std::abs(vq - 2.5820) < 2e-3);
    CHECK(vq == doctest::Approx(v).epsilon(1e-9));
    // the compressed second settings are genuine POVMs
    CHECK_FALSE(q.povms_a[1].projective());
    CHECK_FALSE(q.povms_b[1].projective());
}

TEST_CASE("subspace compression") {
    Povm id({CMat::Identity(3, 3)});
    auto c = project_povm_to_subspace(id);
    REQUIRE(c.elements.size() == 1);
    CHECK((c.elements[0] - CMat::Identity(2, 2)).norm() < 1e-15);

    CMat U = CMat::Identity(3, 3);
    double t = 0.3;
    U(0, 0) = std::cos(t);
    U(1, 0) = std::sin(t);
    U(0, 1) = -std::sin(t);
    U(1, 1) = std::cos(t);
    Povm p = Povm::from_basis(U, 3);
    auto cp = project_povm_to_subspace(p);
    CHECK((cp.elements[0] - p.elements[0].topLeftCorner(2, 2)).norm() < 1e-15);
    CHECK(cp.projective());
    CHECK(cp.elements[2].norm() < 1e-15);
}

TEST_CASE("state visibility inference") {
    Realization r = reference_i12_realization();
    const auto& f = table1_row(12).functional;
    double ideal = bell_value(f, r);
    CHECK(infer_state_visibility(ideal, r, f) == doctest::Approx(1.0));
    Realization iso = r;
    iso.state = DensityMatrix::maximally_mixed(3, 3);
    double noise = bell_value(f, iso);
    CHECK(infer_state_visibility(0.5 * (ideal + noise), r, f) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(infer_state_visibility(noise - 1, r, f) == 0.0);
    // linearity in the state
    iso.state = DensityMatrix(3, 3, 0.3 * r.state.matrix + 0.7 * CMat::Identity(9, 9) / 9.0);
    CHECK(infer_state_visibility(bell_value(f, iso), r, f) == doctest::Approx(0.3).epsilon(1e-12));
    BellFunctional zero = f;
    std::fill(zero.coefficients.begin(), zero.coefficients.end(), 0.0);
    zero.local_max.reset();
    zero.local_min.reset();
    CHECK_THROWS_AS(infer_state_visibility(0.0, r, zero), ValidationError);
}

TEST_CASE("realization text round trip") {
    Realization r = random_realization(2, 3, 77);
    std::string text = serialize_realization(r);
    Realization back = parse_realization(text);
    CHECK(back.state.matrix == r.state.matrix);
    for (int x = 0; x < 3; ++x)
        for (int a = 0; a < 3; ++a) CHECK(back.povms_a[x].elements[a] == r.povms_a[x].elements[a]);
    CHECK(serialize_realization(back) == text);
    CHECK_THROWS_AS(parse_realization(text.substr(0, text.size() / 2)), ParseError);
}

TEST_CASE("seesaw examples") {
    SeesawOptions o;
    SUBCASE("row 14 on qubits") {
        auto r = seesaw_maximize(table1_row(14).functional, 2, 2, o);
        CHECK(std::abs(r.value - 2.6972) < 1e-3);
        CHECK(negativity(r.realization.state) == doctest::Approx(0.5).epsilon(1e-3));
        CHECK(evaluate(table1_row(14).functional, correlation(r.realization)) == doctest::Approx(r.value).epsilon(1e-9));
        for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1] - 1e-12);
    }
    SUBCASE("row 18 on qubits") {
        auto r = seesaw_maximize(table1_row(18).functional, 2, 2, o);
        CHECK(std::abs(r.value - 1.4142) < 1e-3);
    }
    SUBCASE("min side of row 14") {
        o.side = Side::Min;
        auto r = seesaw_maximize(table1_row(14).functional, 2, 2, o);
        CHECK(std::abs(r.value + 3.6972) < 1e-3);
        for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1] + 1e-12);
    }
    SUBCASE("row 12 with POVMs") {
        o.mode = MeasurementMode::Povm;
        o.restarts = 20;
        auto r = seesaw_maximize(table1_row(12).functional, 2, 2, o);
        CHECK(std::abs(r.value - 2.5820) < 1e-3);
        CHECK_NOTHROW(r.realization.validate());
    }
}

TEST_CASE("seesaw is deterministic per seed") {
    SeesawOptions o;
    o.restarts = 6;
    o.seed = 42;
    auto a = seesaw_maximize(table1_row(5).functional, 2, 2, o);
    o.threads = 1;
    auto b = seesaw_maximize(table1_row(5).functional, 2, 2, o);
    CHECK(a.value == b.value);
    CHECK(a.restart_values == b.restart_values);
    CHECK(a.trace == b.trace);
}

TEST_CASE("qubit rows: qubits reach the reported maximum and qutrits do not exceed it") {
    SeesawOptions q2;
    SeesawOptions q3;
    q3.restarts = 6;
    for (int n = 1; n <= 15; ++n) {
        CAPTURE(n);
        const auto& rec = table1_row(n);
        auto r2 = seesaw_maximize(rec.functional, 2, 2, q2);
        CHECK(std::abs(r2.value - rec.reported_quantum_max) < 1e-3);
        auto r3 = seesaw_maximize(rec.functional, 3, 3, q3);
        CHECK(r3.value <= r2.value + 1e-4);
    }
}

TEST_CASE("a projective qubit strategy reaches the inequality 12 maximum") {
    Realization r = parse_realization(read_file(std::string(BELLSCOPE_TEST_DATA) + "/i12_projective_qubit.txt"));
    for (const auto& p : r.povms_a) CHECK(p.projective());
    for (const auto& p : r.povms_b) CHECK(p.projective());
    double v = evaluate(table1_row(12).functional, correlation(r));
    // at least as high as the genuine-POVM reference strategy
    CHECK(v >= bell_value(table1_row(12).functional, reference_i12_realization()) - 1e-9);
    CHECK(std::abs(v - 2.5820) < 1e-3);
}
