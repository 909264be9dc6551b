#pragma once

#include <complex>
#include <istream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "bellscope/scenario.hpp"

namespace bellscope {

struct Token {
    std::string text;
    int line = 0;
    int column = 0;
};

// Whitespace tokenizer that skips '#' comments and remembers positions.
class TokenStream {
public:
    explicit TokenStream(std::istream& in);

    bool done() const { return pos_ >= toks_.size(); }
    const Token& peek() const;
    Token next();
    // tokens of the line the next token sits on
    std::vector<Token> next_line();
    int last_line() const { return last_line_; }
    const std::vector<std::string>& comments() const { return comments_; }

    double next_double();
    std::uint64_t next_count();
    int next_int();
    std::complex<double> next_complex();
    void expect(const std::string& word);

private:
    std::vector<Token> toks_;
    std::vector<std::string> comments_;
    std::size_t pos_ = 0;
    int last_line_ = 0;
};

double parse_double(const Token& t);
std::complex<double> parse_complex(const Token& t);
std::string format_double(double v);
std::string format_complex(std::complex<double> z);

// "scenario 3 3 3 / 3 3 3"
Scenario parse_scenario_line(TokenStream& ts);
std::string scenario_line(const Scenario& s);

ProbabilityTable parse_correlation(std::istream& in);
CountsTable parse_counts(std::istream& in);
// Integer files whose settings sum to more than one are read as counts.
std::variant<ProbabilityTable, CountsTable> parse_table(std::istream& in);
void write_correlation(std::ostream& out, const ProbabilityTable& p);
void write_counts(std::ostream& out, const CountsTable& c);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace bellscope
