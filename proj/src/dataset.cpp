#include "bellscope/dataset.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "bellscope/io.hpp"

namespace bellscope {

namespace {

struct Raw {
    int lmax, lmin;
    std::array<int, 48> c;
    const char* tag;
    bool dagger;
    double qmax, nu_max, v_max;
    std::optional<double> qmin, nu_min, v_min;
    int dmin;
    const char* notes;
};

// clang-format off
const Raw kRows[19] = {
    {2, -4, {0, 1, 0, 1, -1, 0, 0, 1, 0, 1, -2, 1, -1, 1, 0, 0, 0, -1, 0, -1, -1, 1, 0, 0, 1, 0, -1, 0, -2, -1, 1, 0, -1, 1, 0, 1, 0, -1, -1, 0, 1, 1, -1, -1, -1, 0, 1, -1},
     "{[3 3 3][3 3 3]}", true, 2.6972, 0.7819, 0.7415, -4.0, std::nullopt, std::nullopt, 1, ""},
    {2, -4, {-1, 1, 0, 1, -1, 0, 0, 2, 0, 1, -2, 1, -2, 1, 1, 0, 0, -1, 0, -1, -1, 1, 0, 0, 1, 0, 0, 0, -1, -1, 1, 0, -1, 1, 0, 1, 0, -1, -1, 0, 1, 1, -1, -1, -1, 0, 1, -1},
     "{[3 3 3][3 3 3]}", true, 2.6712, 0.7884, 0.7487, std::nullopt, std::nullopt, std::nullopt, 1, ""},
    {2, -5, {0, 1, 0, 1, -1, 0, 0, 1, 0, 1, -2, 1, -2, 1, 0, 0, 0, -1, 0, -1, -1, 1, 0, 0, 1, 0, -1, 0, -1, -1, 1, 0, 0, 1, 0, 1, 0, -1, -1, 0, 1, 1, -1, -1, -2, 0, 1, -1},
     "{[3 3 3][3 3 3]}", true, 2.6586, 0.7915, 0.7523, std::nullopt, std::nullopt, std::nullopt, 2, ""},
    {2, -5, {0, 1, -1, 0, 0, 1, -1, 2, 1, 1, -1, 1, -2, 1, 0, 0, 0, -1, 0, -1, 0, 1, 0, 0, 1, -1, -2, 1, -1, -1, 1, 0, -1, 0, -1, 1, 0, 0, 0, 0, 1, 0, -2, -1, 0, 1, 1, -1},
     "{[3 3 3][3 3 3]}", true, 2.6586, 0.7915, 0.7523, std::nullopt, std::nullopt, std::nullopt, 2, ""},
    {2, -4, {0, 1, 0, 1, -1, 0, 0, 1, 0, 1, -2, 1, -2, 1, 0, 0, 0, -1, 0, -1, -1, 1, 0, 0, 1, 0, 0, 0, -1, -1, 1, 0, 0, 1, 0, 1, 0, -1, -2, 0, 1, 1, -1, -1, -2, 0, 1, -1},
     "{[3 3 3][3 3 3]}", true, 2.6488, 0.794, 0.7551, std::nullopt, std::nullopt, std::nullopt, 4, ""},
    {2, -4, {-1, 1, 0, 1, -1, 0, 0, 2, 0, 1, -2, 1, -2, 1, 1, 0, 0, -1, 0, -1, -1, 1, 0, 0, 1, 0, 0, 0, -1, -1, 1, 0, 0, 1, 0, 1, 0, -1, -1, 0, 1, 1, -1, -1, -2, 0, 1, -1},
     "{[3 3 3][3 3 3]}", true, 2.6577, 0.7917, 0.7525, std::nullopt, std::nullopt, std::nullopt, 4, ""},
    {2, -4, {0, 1, 0, 1, -1, 0, 0, 1, 0, 1, -2, 1, -2, 1, 0, 0, 0, -1, 0, -1, -1, 1, 0, 0, 1, 0, -1, 0, -1, -1, 1, -1, 0, 1, 0, 1, 0, -1, -1, 0, 1, 1, -1, -1, -2, 0, 1, 0},
     "{[3 3 3][3 3 3]}", true, 2.6577, 0.7917, 0.7525, std::nullopt, std::nullopt, std::nullopt, 5, ""},
    {2, -4, {-1, 1, -1, 0, 0, 1, 0, 2, 0, 1, -2, 1, -2, 1, 1, 0, 0, -1, 0, -1, 0, 1, 0, 0, 1, -1, -1, 1, -1, -1, 1, 0, -1, 0, -1, 1, 0, 0, 0, 0, 1, 0, -1, -1, -1, 1, 1, -1},
     "{[3 3 3][3 3 3]}", false, 2.6577, 0.7917, 0.7525, -4.001, 0.9997, 0.9997, 5, ""},
    {2, -4, {0, 1, -1, 0, 0, 1, 0, 1, 0, 1, -2, 1, -2, 1, 0, 0, 0, -1, 0, -1, 0, 1, 0, 0, 1, -1, -2, 1, -1, -1, 1, 0, -2, 0, -1, 1, 0, 0, 0, 0, 1, 0, -1, -1, 0, 1, 1, -1},
     "{[3 3 3][3 3 3]}", false, 2.672, 0.7881, 0.7485, -4.0171, 0.9941, 0.9941, 6, ""},
    {1, -5, {0, 1, -1, 0, -1, 0, 0, 1, 0, 1, -2, 1, -1, 1, 0, -1, 0, -1, 0, -1, -1, 1, 0, 0, 1, 0, 0, 0, -2, -1, 1, -1, 0, 1, -1, 1, 0, 0, -1, 0, 1, 0, -1, -1, -1, 1, 1, 0},
     "{[3 3 3][3 3 3]}", false, 1.672, 0.7881, 0.7485, -5.0171, 0.9941, 0.9941, 7, ""},
    {2, -4, {0, 1, 0, 1, -1, 0, 0, 1, 0, 1, -2, 1, -1, 1, 0, 0, 0, -1, 0, -1, -1, 1, 0, 0, 1, 0, -1, 0, -2, -1, 1, 0, 0, 1, 0, 1, 0, -1, -1, 0, 1, 1, -1, -1, -2, 0, 1, -1},
     "{[3 3 3][3 3 3]}", false, 2.6955, 0.7824, 0.742, -4.0138, 0.9952, 0.9952, 8, ""},
    {2, -3, {0, 1, 0, 1, -1, 0, 1, 1, 0, 0, -2, 1, -1, 1, 1, 0, 0, -1, 0, -1, 0, 0, 0, 0, 0, 0, 0, 1, -2, -1, 0, -1, -1, 1, -1, 1, 0, 0, 0, 0, 1, 0, -1, -1, 0, 1, 1, -1},
     "{[3 3 2][3 3 2]}", false, 2.582, 0.7746, 0.7277, -3.0005, 0.9998, 0.9998, 8, ""},
    {2, -3, {-1, 1, -1, 0, 0, 1, 0, 2, 0, 1, -2, 1, -2, 1, 1, 0, 0, -1, 0, -1, 0, 1, 0, 0, 1, -1, -1, 1, -1, -1, 1, 0, -2, 0, -1, 1, 0, 0, 0, 0, 1, 0, -1, -1, 0, 1, 1, -1},
     "{[3 3 2][3 3 2]}", false, 2.6712, 0.7884, 0.7487, -3.6712, 0.7884, 0.8172, 26, ""},
    {2, -3, {0, 1, 0, 1, -1, 0, 0, 1, 0, 1, -2, 1, -1, 1, 0, 0, 0, -1, 0, -1, -1, 1, 0, 0, 1, 0, 0, 0, -2, -1, 1, 0, 0, 1, 0, 1, 0, -1, -2, 0, 1, 1, -1, -1, -2, 0, 1, -1},
     "{[3 3 3][3 3 3]}", false, 2.6972, 0.7819, 0.7415, -3.6972, 0.7819, 0.8114, 27, ""},
    {1, -3, {-2, 1, 0, 0, 0, -1, 0, 2, -1, 0, -1, 1, -1, 1, 1, -1, 0, -1, 0, -1, -1, 1, -1, 0, 2, -1, 1, 0, 0, -1, 0, 1, 0, 1, 0, 1, 0, 0, -1, -1, 1, 0, 0, 0, 0, 0, 0, 0},
     "{[3 3 2][3 3 2]}", false, 1.5923, 0.7715, 0.7242, -3.5923, 0.7715, 0.805, 29, ""},
    {1, -1, {0, 1, 0, 0, 0, 0, -1, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, -1, 1, 0, 0, 0, 1, 0, -1, -1, 0, 0, 0, 1, 0, -1, -1, 0, 0, 0},
     "{[3 2][2 2 2]}", false, 1.2532, 0.7247, 0.7247, -1.0328, 0.9682, 0.9682, 30, "lifted from a smaller scenario"},
    {1, -3, {1, 1, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0, 1, -1, -1, -1, 0, -1, -1, 0, 0, 0, -1, 0, 0, 1, 0, -1, -1, -1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, -1, -1, 1, 0, 0, 1},
     "{[3 2 2][3 2 2]}", true, 1.309, 0.7639, 0.7639, std::nullopt, std::nullopt, std::nullopt, 4, ""},
    {1, -2, {1, 1, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0, 1, -1, -1, 0, 0, -1, -1, 0, 0, 0, -1, 0, 0, 1, 0, -1, -1, -1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, -1, -1, -1, 1, 0, 1, 2},
     "{[3 2 2][3 2 2]}", true, 1.4142, 0.7071, 0.7071, std::nullopt, std::nullopt, std::nullopt, 16, ""},
    {1, -3, {0, 1, 0, 0, 0, 0, 0, 0, -1, 0, -1, 1, 0, 1, -1, -1, -1, -1, 0, -1, 0, 0, -1, 1, 0, -1, 0, 0, -1, -1, 0, -1, 0, 1, 0, 1, 0, -1, 0, -1, 0, 0, 0, -1, 0, 1, 0, 0},
     "{[3 3 3][3 3 3]}", false, 1.3782, 0.7925, 0.7925, -3.2071, 0.7071, 0.925, 13, "quantum max is a lower bound from seesaw"},
};
// clang-format on

std::vector<InequalityRecord> build() {
    std::vector<InequalityRecord> out;
    for (int i = 0; i < 19; ++i) {
        const Raw& r = kRows[i];
        InequalityRecord rec;
        rec.index = i + 1;
        rec.functional.form = Form::CG;
        rec.functional.coefficients.assign(r.c.begin(), r.c.end());
        rec.functional.local_max = r.lmax;
        rec.functional.local_min = r.lmin;
        rec.reducible_scenario = r.tag;
        rec.quantum_min_is_local = r.dagger;
        rec.reported_quantum_max = r.qmax;
        rec.reported_state_visibility_max = r.nu_max;
        rec.reported_visibility_max = r.v_max;
        rec.reported_quantum_min = r.qmin;
        rec.reported_state_visibility_min = r.nu_min;
        rec.reported_visibility_min = r.v_min;
        rec.reported_d_min = r.dmin;
        rec.notes = r.notes;
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace

const std::vector<InequalityRecord>& table1() {
    static const std::vector<InequalityRecord> rows = build();
    return rows;
}

const InequalityRecord& table1_row(int n) {
    if (n < 1 || n > 19) throw ValidationError("inequality index must be between 1 and 19, got " + std::to_string(n));
    return table1()[n - 1];
}

std::int64_t table1_checksum() {
    std::int64_t s = 0;
    for (int i = 0; i < 19; ++i)
        for (int k = 0; k < 48; ++k) s += static_cast<std::int64_t>((i + 1) * 131 + k + 1) * kRows[i].c[k];
    return s;
}

BellFunctional i3plus() {
    BellFunctional f;
    f.form = Form::Full;
    const Scenario& s = f.scenario;
    f.coefficients.assign(s.full_dimension(), 0.0);
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    if ((x * y + a + b) % 3 == 0) f.coefficients[s.full_index(x, y, a, b)] = 1.0 / 9.0;
    f.local_max = 2.0 / 3.0;
    f.local_min = 0.0;
    return f;
}

BellFunctional parse_functional(std::istream& in) {
    TokenStream ts(in);
    BellFunctional f;
    bool have_form = false;
    while (!ts.done()) {
        const Token& t = ts.peek();
        if (t.text == "form") {
            ts.next();
            Token v = ts.next();
            if (v.text == "cg") f.form = Form::CG;
            else if (v.text == "full") f.form = Form::Full;
            else throw ParseError("form must be 'cg' or 'full', found '" + v.text + "'", v.line, v.column);
            have_form = true;
        } else if (t.text == "bound_max") {
            ts.next();
            f.local_max = ts.next_double();
        } else if (t.text == "bound_min") {
            ts.next();
            f.local_min = ts.next_double();
        } else if (t.text == "offset") {
            ts.next();
            f.offset = ts.next_double();
        } else if (t.text == "scenario") {
            f.scenario = parse_scenario_line(ts);
        } else {
            break;
        }
    }
    if (!have_form) throw ParseError("missing 'form cg|full' line", 1, 1);
    std::size_t want = f.form == Form::CG ? f.scenario.cg_dimension() : f.scenario.full_dimension();
    while (!ts.done()) {
        Token t = ts.next();
        if (f.coefficients.size() == want)
            throw ParseError("too many coefficients: expected " + std::to_string(want), t.line, t.column);
        f.coefficients.push_back(parse_double(t));
    }
    if (f.coefficients.size() != want)
        throw ParseError("expected " + std::to_string(want) + " coefficients, found " +
                             std::to_string(f.coefficients.size()) + " (file truncated?)",
                         ts.last_line() + 1, 1);
    return f;
}

std::string serialize_functional(const BellFunctional& f, const std::vector<std::string>& comments) {
    f.validate();
    std::ostringstream os;
    for (const auto& c : comments) os << "# " << c << "\n";
    os << "form " << (f.form == Form::CG ? "cg" : "full") << "\n";
    if (f.scenario != Scenario::flagship()) os << scenario_line(f.scenario) << "\n";
    if (f.local_max) os << "bound_max " << format_double(*f.local_max) << "\n";
    if (f.local_min) os << "bound_min " << format_double(*f.local_min) << "\n";
    if (f.offset != 0.0) os << "offset " << format_double(f.offset) << "\n";
    const Scenario& s = f.scenario;
    if (f.form == Form::Full) {
        for (int x = 0; x < s.inputs_a(); ++x)
            for (int y = 0; y < s.inputs_b(); ++y) {
                std::size_t o = s.block_offset(x, y), n = static_cast<std::size_t>(s.outputs_a(x)) * s.outputs_b(y);
                for (std::size_t k = 0; k < n; ++k) os << (k ? " " : "") << format_double(f.coefficients[o + k]);
                os << "\n";
            }
    } else {
        for (std::size_t k = 0; k < f.coefficients.size(); ++k)
            os << (k ? " " : "") << format_double(f.coefficients[k]);
        os << "\n";
    }
    return os.str();
}

}  // namespace bellscope
