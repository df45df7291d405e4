#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace subperf {

/// Base of every error raised by the library. The CLI maps all of these to
/// the "data error" exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input row. Carries the file and 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::string file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what),
          file_(std::move(file)),
          line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

/// A record refers to a task or student that does not exist.
class ReferentialError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Inconsistent or missing configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class PredictionError : public Error {
public:
    using Error::Error;
};

class RebalancingError : public Error {
public:
    using Error::Error;
};

/// Rank-deficient design matrix in least squares.
class SingularityError : public Error {
public:
    using Error::Error;
};

}  // namespace subperf
