#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mathfuse {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structurally malformed input: wrong column count, unreadable numbers,
/// bad table syntax. Carries a 1-based line number when the source is
/// line-oriented (0 when not applicable).
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

/// Well-formed input that violates a documented invariant (duplicate
/// documents, rank gaps, negative grades, out-of-range parameters).
class ValidationError : public Error {
public:
    using Error::Error;
};

} // namespace mathfuse
