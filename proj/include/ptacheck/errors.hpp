#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ptacheck {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line, std::size_t offset = 0)
        : Error("line " + std::to_string(line) + ": " + what), line(line), offset(offset) {}
    std::size_t line;
    std::size_t offset;
};

struct ChecksumMismatch : Error {
    using Error::Error;
};

struct ModelError : Error {
    using Error::Error;
};

struct SharedEventArityMismatch : ModelError {
    using ModelError::ModelError;
};

struct StateSpaceLimitExceeded : Error {
    explicit StateSpaceLimitExceeded(std::size_t limit)
        : Error("state space exceeded the configured cap of " + std::to_string(limit) + " states"), limit(limit) {}
    std::size_t limit;
};

struct NotConverged : Error {
    NotConverged(std::size_t max_iterations, double residual)
        : Error("value iteration did not converge within " + std::to_string(max_iterations) +
                " iterations (residual " + std::to_string(residual) + ")"),
          max_iterations(max_iterations), residual(residual) {}
    std::size_t max_iterations;
    double residual;
};

struct TooManyAdversaries : Error {
    explicit TooManyAdversaries(std::size_t cap)
        : Error("adversary count exceeds the enumeration cap of " + std::to_string(cap)), cap(cap) {}
    std::size_t cap;
};

struct ArityMismatch : Error {
    using Error::Error;
};

struct BadVariant : Error {
    using Error::Error;
};

struct BadParams : Error {
    using Error::Error;
};

struct EmptySpace : Error {
    using Error::Error;
};

struct UnsupportedVariant : Error {
    using Error::Error;
};

struct DecoratedInput : Error {
    using Error::Error;
};

} // namespace ptacheck
