#include "doctest.h"

#include <sstream>

#include "bellscope/dataset.hpp"
#include "bellscope/polytope.hpp"

using namespace bellscope;

TEST_CASE("catalogue has nineteen rows of 48 integers") {
    CHECK(table1().size() == 19);
    for (const auto& r : table1()) {
        CHECK(r.functional.coefficients.size() == 48);
        CHECK(r.functional.form == Form::CG);
        for (double c : r.functional.coefficients) CHECK(c == static_cast<double>(static_cast<int>(c)));
    }
    CHECK(table1_checksum() == -84502);
}

TEST_CASE("catalogue row 14 literal") {
    const std::vector<double> want{0,  1,  0,  1,  -1, 0,  0,  1,  0, 1,  -2, 1, -1, 1,  0,  0,
                                   0,  -1, 0,  -1, -1, 1,  0,  0,  1, 0,  0,  0, -2, -1, 1,  0,
                                   0,  1,  0,  1,  0,  -1, -2, 0,  1, 1,  -1, -1, -2, 0,  1,  -1};
    CHECK(table1_row(14).functional.coefficients == want);
    CHECK(*table1_row(14).functional.local_max == 2);
    CHECK(*table1_row(14).functional.local_min == -3);
    CHECK_THROWS_AS(table1_row(20), ValidationError);
}

TEST_CASE("reducible scenario tags") {
    CHECK(table1_row(16).reducible_scenario == "{[3 2][2 2 2]}");
    CHECK(table1_row(12).reducible_scenario == "{[3 3 2][3 3 2]}");
    CHECK(table1_row(18).reducible_scenario == "{[3 2 2][3 2 2]}");
    CHECK(table1_row(1).reducible_scenario == "{[3 3 3][3 3 3]}");
}

TEST_CASE("rows without quantum violation on the min side") {
    std::vector<int> expect{1, 2, 3, 4, 5, 6, 7, 17, 18};
    std::vector<int> got;
    for (const auto& r : table1())
        if (r.quantum_min_is_local) got.push_back(r.index);
    CHECK(got == expect);
}

TEST_CASE("i3plus functional") {
    auto f = i3plus();
    CHECK(f.form == Form::Full);
    CHECK(*f.local_max == doctest::Approx(2.0 / 3.0));
    auto b = local_bound_max(f);
    CHECK(b.exact);
    CHECK(b.value == 2.0 / 3.0);
}

TEST_CASE("functional serialization round trips bit for bit") {
    for (int n : {1, 14, 19}) {
        auto f = table1_row(n).functional;
        std::istringstream is(serialize_functional(f));
        auto g = parse_functional(is);
        CHECK(g.coefficients == f.coefficients);
        CHECK(*g.local_max == *f.local_max);
        CHECK(*g.local_min == *f.local_min);
    }
    auto f = i3plus();
    f.offset = 0.1;
    std::istringstream is(serialize_functional(f, {"provenance line"}));
    auto g = parse_functional(is);
    CHECK(g.form == Form::Full);
    CHECK(g.coefficients == f.coefficients);
    CHECK(g.offset == f.offset);
}

TEST_CASE("truncated functional names the shortfall") {
    std::string text = "form cg\nbound_max 2\n";
    for (int i = 0; i < 40; ++i) text += "1 ";
    text += "\n";
    std::istringstream is(text);
    try {
        parse_functional(is);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        std::string msg = e.what();
        CHECK(msg.find("expected 48 coefficients, found 40") != std::string::npos);
        CHECK(e.line() == 4);
    }
}

TEST_CASE("malformed functional header") {
    std::istringstream a("form diagonal\n1 2 3\n");
    CHECK_THROWS_AS(parse_functional(a), ParseError);
    std::istringstream b("bound_max 2\n1 2 3\n");
    CHECK_THROWS_AS(parse_functional(b), ParseError);
    std::istringstream c("form cg\nbound_max two\n");
    try {
        parse_functional(c);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 11);
    }
}
