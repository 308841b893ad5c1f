#pragma once

#include <stdexcept>
#include <string>

namespace gpvol {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that violates a documented precondition.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Malformed text input. Carries the 1-based line number.
class ParseError : public InvalidInput {
public:
    ParseError(std::size_t line, const std::string& what)
        : InvalidInput("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Factorization or other numerical breakdown that survived the repair ladder.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Every restart of a hyperparameter search was rejected.
class EstimationFailed : public Error {
public:
    using Error::Error;
};

} // namespace gpvol
