#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace crf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input. Carries the offending record (0-based) and line (1-based).
class ParseError : public Error {
public:
    ParseError(const std::string& what, long record, long line)
        : Error(what), record_(record), line_(line) {}
    long record() const noexcept { return record_; }
    long line() const noexcept { return line_; }

private:
    long record_;
    long line_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DegenerateCurveError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

/// Optimizer stopped without meeting its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> best)
        : Error(what), best_(std::move(best)) {}
    const std::vector<double>& best_so_far() const noexcept { return best_; }

private:
    std::vector<double> best_;
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace crf
