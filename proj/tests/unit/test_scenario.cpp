#include "doctest.h"

#include <random>
#include <sstream>

#include "bellscope/dataset.hpp"
#include "bellscope/io.hpp"
#include "bellscope/scenario.hpp"

using namespace bellscope;

namespace {

ProbabilityTable random_ns_table(std::mt19937_64& rng) {
    // random mixture of deterministic points is non-signaling
    Scenario s = Scenario::flagship();
    std::uniform_int_distribution<int> out(0, 2);
    std::uniform_real_distribution<double> w(0.0, 1.0);
    std::vector<double> p(s.full_dimension(), 0.0);
    double total = 0.0;
    for (int k = 0; k < 6; ++k) {
        std::vector<int> a{out(rng), out(rng), out(rng)}, b{out(rng), out(rng), out(rng)};
        double wk = w(rng);
        total += wk;
        auto d = ProbabilityTable::deterministic(s, a, b);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += wk * d.entries()[i];
    }
    for (double& v : p) v /= total;
    return ProbabilityTable(s, p);
}

}  // namespace

TEST_CASE("flagship dimensions") {
    Scenario s = Scenario::flagship();
    CHECK(s.full_dimension() == 81);
    CHECK(s.cg_dimension() == 48);
    CHECK(s.num_vertices() == 729);
    CHECK(s.tag() == "{[3 3 3][3 3 3]}");
}

TEST_CASE("cg layout is column major over the table") {
    Scenario s = Scenario::flagship();
    CHECK(s.cg_alice(0, 0) == 0);
    CHECK(s.cg_alice(2, 1) == 5);
    CHECK(s.cg_bob(0, 0) == 6);
    CHECK(s.cg_joint(0, 0, 0, 0) == 7);
    CHECK(s.cg_joint(2, 1, 0, 0) == 12);
    CHECK(s.cg_bob(0, 1) == 13);
    CHECK(s.cg_joint(2, 1, 2, 1) == 47);
}

TEST_CASE("general scenario dimensions") {
    Scenario s({3, 2}, {2, 2, 2});
    CHECK(s.full_dimension() == 3 * 2 * 3 + 2 * 2 * 3);
    CHECK(s.cg_dimension() == 3 + 3 + 3 * 3);
    CHECK_THROWS_AS(Scenario({1, 2}, {2}), ValidationError);
}

TEST_CASE("probability table validation") {
    Scenario s = Scenario::flagship();
    std::vector<double> p(81, 1.0 / 9);
    CHECK_NOTHROW(ProbabilityTable(s, p));
    p[0] += 1e-6;
    CHECK_THROWS_AS(ProbabilityTable(s, p), ValidationError);
    p[0] -= 2e-6;
    p[1] += 1e-6;
    CHECK_NOTHROW(ProbabilityTable(s, p));
    CHECK_THROWS_AS(ProbabilityTable(s, std::vector<double>(80, 0.1)), ValidationError);
}

TEST_CASE("cg round trip on non-signaling tables") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        auto p = random_ns_table(rng);
        auto q = ProbabilityTable::from_cg(p.scenario(), p.cg());
        for (std::size_t i = 0; i < 81; ++i) CHECK(q.entries()[i] == doctest::Approx(p.entries()[i]).epsilon(1e-12));
    }
}

TEST_CASE("full and cg forms agree on non-signaling tables") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int t = 0; t < 30; ++t) {
        BellFunctional f;
        f.coefficients.resize(48);
        for (double& c : f.coefficients) c = u(rng);
        auto full = full_from_cg(f);
        auto back = cg_from_full(full);
        auto p = random_ns_table(rng);
        CHECK(evaluate(full, p) == doctest::Approx(evaluate(f, p)).epsilon(1e-12));
        CHECK(evaluate(back, p) == doctest::Approx(evaluate(f, p)).epsilon(1e-12));
        for (std::size_t k = 0; k < 48; ++k) CHECK(back.coefficients[k] == doctest::Approx(f.coefficients[k]));
        CHECK(back.offset == doctest::Approx(0.0));
    }
}

TEST_CASE("cg_from_full picks up a constant") {
    BellFunctional g = i3plus();
    auto cg = cg_from_full(g);
    // all-last-outcome terms produce the constant
    CHECK(cg.offset != 0.0);
    auto u = ProbabilityTable::uniform(Scenario::flagship());
    CHECK(evaluate(cg, u) == doctest::Approx(evaluate(g, u)).epsilon(1e-14));
    CHECK(evaluate(g, u) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("uniform and deterministic tables are non-signaling") {
    Scenario s = Scenario::flagship();
    CHECK(check_nonsignaling(ProbabilityTable::uniform(s)));
    CHECK(check_nonsignaling(ProbabilityTable::deterministic(s, {0, 1, 2}, {2, 2, 0})));
    auto r = signaling_deltas(ProbabilityTable::uniform(s));
    CHECK(r.deltas.size() == 54);
    CHECK(r.max_delta < 1e-15);
}

TEST_CASE("signaling deltas see a marginal shift") {
    Scenario s = Scenario::flagship();
    auto u = ProbabilityTable::uniform(s);
    std::vector<double> p = u.entries();
    // move mass from a=1 to a=0 in setting (0,0) only
    for (int b = 0; b < 3; ++b) {
        p[s.full_index(0, 0, 0, b)] += 0.01;
        p[s.full_index(0, 0, 1, b)] -= 0.01;
    }
    ProbabilityTable q(s, p);
    auto r = signaling_deltas(q);
    CHECK(r.max_delta == doctest::Approx(0.03));
    CHECK_FALSE(check_nonsignaling(q));
}

TEST_CASE("white noise mixing") {
    std::mt19937_64 rng(3);
    auto p = random_ns_table(rng);
    auto m = mix_with_white_noise(p, 0.25);
    auto u = ProbabilityTable::uniform(p.scenario());
    for (std::size_t i = 0; i < 81; ++i)
        CHECK(m.entries()[i] == doctest::Approx(0.25 * p.entries()[i] + 0.75 * u.entries()[i]));
    CHECK_THROWS_AS(mix_with_white_noise(p, 1.5), ValidationError);
}

TEST_CASE("counts and frequencies") {
    Scenario s = Scenario::flagship();
    std::vector<std::uint64_t> n(81, 4);
    n[s.full_index(1, 2, 0, 0)] = 0;
    CountsTable c(s, n);
    CHECK(c.total(1, 2) == 32);
    auto f = frequencies_from_counts(c);
    CHECK(f(1, 2, 0, 1) == doctest::Approx(4.0 / 32));
    std::vector<std::uint64_t> z(81, 0);
    CHECK_THROWS_AS(frequencies_from_counts(CountsTable(s, z)), ValidationError);
}

TEST_CASE("bonferroni band") {
    CHECK(bonferroni_band(2.0, 1) == doctest::Approx(2.0).epsilon(1e-9));
    // 0.0455 / 54 two-sided
    CHECK(bonferroni_band(2.0, 54) == doctest::Approx(3.3413).epsilon(1e-3));
}

TEST_CASE("correlation file round trip is exact") {
    std::mt19937_64 rng(5);
    auto p = random_ns_table(rng);
    std::ostringstream os;
    write_correlation(os, p);
    std::istringstream is(os.str());
    auto q = parse_correlation(is);
    CHECK(q.entries() == p.entries());
}

TEST_CASE("correlation parse errors carry positions") {
    std::string text = "scenario 3 3 3 / 3 3 3\n";
    for (int i = 0; i < 8; ++i) text += "0.2 0.1 0.1 0.1 0.1 0.1 0.1 0.1 0.1\n";
    std::istringstream truncated(text);
    try {
        parse_correlation(truncated);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 10);
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
    std::istringstream bad("scenario 3 3 3 / 3 3 3\n0.2 0.1 x 0.1 0.1 0.1 0.1 0.1 0.1\n");
    try {
        parse_correlation(bad);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 9);
    }
}

TEST_CASE("table detection between counts and probabilities") {
    std::string counts = "scenario 2 2 / 2 2\n";
    for (int i = 0; i < 4; ++i) counts += "10 0 0 10\n";
    std::istringstream is(counts);
    CHECK(std::holds_alternative<CountsTable>(parse_table(is)));
    std::string probs = "scenario 2 2 / 2 2\n";
    for (int i = 0; i < 4; ++i) probs += "0.5 0 0 0.5\n";
    std::istringstream ip(probs);
    CHECK(std::holds_alternative<ProbabilityTable>(parse_table(ip)));
}

TEST_CASE("complex tokens") {
    Token t{"0.5-0.25j", 1, 1};
    CHECK(parse_complex(t) == std::complex<double>(0.5, -0.25));
    t.text = "-1e-3+2E-2j";
    CHECK(parse_complex(t) == std::complex<double>(-1e-3, 2e-2));
    t.text = "0.75";
    CHECK(parse_complex(t) == std::complex<double>(0.75, 0));
    std::complex<double> z(0.1, -1.0 / 3);
    t.text = format_complex(z);
    CHECK(parse_complex(t) == z);
}
