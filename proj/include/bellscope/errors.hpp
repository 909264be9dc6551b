#pragma once

#include <stdexcept>
#include <string>

namespace bellscope {

// Bad input: malformed files, wrong dimensions, invalid tables.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
public:
    ParseError(const std::string& msg, int line, int column)
        : ValidationError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
          line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

// A numerical method failed to produce a certified answer.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bellscope
