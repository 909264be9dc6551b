#include "bellscope/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bellscope {

TokenStream::TokenStream(std::istream& in) {
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            comments_.push_back(line.substr(hash + 1));
            line.resize(hash);
        }
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            if (i >= line.size()) break;
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
            toks_.push_back({line.substr(i, j - i), ln, static_cast<int>(i) + 1});
            i = j;
        }
    }
    last_line_ = ln;
}

const Token& TokenStream::peek() const {
    if (done()) throw ParseError("unexpected end of file", last_line_ + 1, 1);
    return toks_[pos_];
}

Token TokenStream::next() {
    Token t = peek();
    ++pos_;
    return t;
}

std::vector<Token> TokenStream::next_line() {
    std::vector<Token> out;
    if (done()) return out;
    int ln = toks_[pos_].line;
    while (!done() && toks_[pos_].line == ln) out.push_back(toks_[pos_++]);
    return out;
}

double parse_double(const Token& t) {
    double v = 0.0;
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    if (*b == '+') ++b;
    auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v))
        throw ParseError("expected a number, found '" + t.text + "'", t.line, t.column);
    return v;
}

std::complex<double> parse_complex(const Token& t) {
    const std::string& s = t.text;
    if (s.empty() || (s.back() != 'j' && s.back() != 'i')) return {parse_double(t), 0.0};
    // split at the sign that starts the imaginary part
    std::size_t cut = std::string::npos;
    for (std::size_t i = s.size() - 1; i > 0; --i)
        if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
            cut = i;
            break;
        }
    Token re = t, im = t;
    if (cut == std::string::npos) {
        re.text = "0";
        im.text = s.substr(0, s.size() - 1);
    } else {
        re.text = s.substr(0, cut);
        im.text = s.substr(cut, s.size() - 1 - cut);
    }
    if (im.text == "+" || im.text == "-" || im.text.empty()) im.text += "1";
    try {
        return {parse_double(re), parse_double(im)};
    } catch (const ParseError&) {
        throw ParseError("expected a complex number like 0.5-0.25j, found '" + s + "'", t.line, t.column);
    }
}

double TokenStream::next_double() { return parse_double(next()); }

std::uint64_t TokenStream::next_count() {
    Token t = next();
    std::uint64_t v = 0;
    auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (r.ec != std::errc() || r.ptr != t.text.data() + t.text.size())
        throw ParseError("expected a nonnegative integer count, found '" + t.text + "'", t.line, t.column);
    return v;
}

int TokenStream::next_int() {
    Token t = next();
    int v = 0;
    auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (r.ec != std::errc() || r.ptr != t.text.data() + t.text.size())
        throw ParseError("expected an integer, found '" + t.text + "'", t.line, t.column);
    return v;
}

std::complex<double> TokenStream::next_complex() { return parse_complex(next()); }

void TokenStream::expect(const std::string& word) {
    Token t = next();
    if (t.text != word) throw ParseError("expected '" + word + "', found '" + t.text + "'", t.line, t.column);
}

std::string format_double(double v) {
    if (v == 0.0) return "0";
    char buf[32];
    // shortest form that round-trips
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string format_complex(std::complex<double> z) {
    std::string im = format_double(std::abs(z.imag()));
    return format_double(z.real()) + (std::signbit(z.imag()) ? "-" : "+") + im + "j";
}

Scenario parse_scenario_line(TokenStream& ts) {
    Token head = ts.next();
    if (head.text != "scenario")
        throw ParseError("expected 'scenario', found '" + head.text + "'", head.line, head.column);
    std::vector<int> oa, ob;
    bool bob = false;
    while (!ts.done() && ts.peek().line == head.line) {
        if (ts.peek().text == "/") {
            ts.next();
            bob = true;
            continue;
        }
        (bob ? ob : oa).push_back(ts.next_int());
    }
    if (!bob) throw ParseError("scenario line needs '/' between the parties", head.line, head.column);
    try {
        return Scenario(oa, ob);
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), head.line, head.column);
    }
}

std::string scenario_line(const Scenario& s) {
    std::string out = "scenario";
    for (int o : s.outputs_a()) out += " " + std::to_string(o);
    out += " /";
    for (int o : s.outputs_b()) out += " " + std::to_string(o);
    return out;
}

namespace {

// rows of numbers, one per (x, y)
template <class Read>
void read_rows(TokenStream& ts, const Scenario& s, Read read) {
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int y = 0; y < s.inputs_b(); ++y) {
            std::size_t want = static_cast<std::size_t>(s.outputs_a(x)) * s.outputs_b(y);
            if (ts.done())
                throw ParseError("missing row for setting (x,y) = (" + std::to_string(x) + "," + std::to_string(y) +
                                     "), file is truncated",
                                 ts.last_line() + 1, 1);
            auto row = ts.next_line();
            if (row.size() != want) {
                const Token& t = row.size() > want ? row[want] : row.back();
                throw ParseError("setting (" + std::to_string(x) + "," + std::to_string(y) + ") needs " +
                                     std::to_string(want) + " entries, found " + std::to_string(row.size()),
                                 t.line, row.size() > want ? t.column : t.column + static_cast<int>(t.text.size()));
            }
            for (std::size_t k = 0; k < want; ++k) read(s.block_offset(x, y) + k, row[k]);
        }
    if (!ts.done()) {
        const Token& t = ts.peek();
        throw ParseError("unexpected trailing data '" + t.text + "'", t.line, t.column);
    }
}

Scenario header(TokenStream& ts) {
    if (!ts.done() && ts.peek().text == "scenario") return parse_scenario_line(ts);
    return Scenario::flagship();
}

}  // namespace

ProbabilityTable parse_correlation(std::istream& in) {
    TokenStream ts(in);
    Scenario s = header(ts);
    std::vector<double> p(s.full_dimension());
    read_rows(ts, s, [&](std::size_t i, const Token& t) { p[i] = parse_double(t); });
    return ProbabilityTable(s, std::move(p));
}

CountsTable parse_counts(std::istream& in) {
    TokenStream ts(in);
    Scenario s = header(ts);
    std::vector<std::uint64_t> n(s.full_dimension());
    read_rows(ts, s, [&](std::size_t i, const Token& t) {
        auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), n[i]);
        if (r.ec != std::errc() || r.ptr != t.text.data() + t.text.size())
            throw ParseError("expected a nonnegative integer count, found '" + t.text + "'", t.line, t.column);
    });
    return CountsTable(s, std::move(n));
}

std::variant<ProbabilityTable, CountsTable> parse_table(std::istream& in) {
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    std::istringstream probe(text);
    try {
        CountsTable c = parse_counts(probe);
        const Scenario& s = c.scenario();
        bool counts = false;
        for (int x = 0; x < s.inputs_a(); ++x)
            for (int y = 0; y < s.inputs_b(); ++y) counts |= c.total(x, y) > 1;
        if (counts) return c;
    } catch (const ParseError&) {
    }
    std::istringstream again(text);
    return parse_correlation(again);
}

void write_correlation(std::ostream& out, const ProbabilityTable& p) {
    const Scenario& s = p.scenario();
    out << scenario_line(s) << "\n";
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int y = 0; y < s.inputs_b(); ++y) {
            for (int a = 0; a < s.outputs_a(x); ++a)
                for (int b = 0; b < s.outputs_b(y); ++b)
                    out << (a || b ? " " : "") << format_double(p(x, y, a, b));
            out << "\n";
        }
}

void write_counts(std::ostream& out, const CountsTable& c) {
    const Scenario& s = c.scenario();
    out << scenario_line(s) << "\n";
    for (int x = 0; x < s.inputs_a(); ++x)
        for (int y = 0; y < s.inputs_b(); ++y) {
            for (int a = 0; a < s.outputs_a(x); ++a)
                for (int b = 0; b < s.outputs_b(y); ++b) out << (a || b ? " " : "") << c(x, y, a, b);
            out << "\n";
        }
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + path + "'");
    f << contents;
    if (!f) throw ValidationError("failed writing '" + path + "'");
}

}  // namespace bellscope
