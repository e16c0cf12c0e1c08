#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace propforge {

// Precondition on a numeric input failed; message names the offending field.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed text input (CSV, config, JSON payload).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Well-formed input that breaks a domain invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A required artifact (checkpoint, dataset) is absent.
class MissingArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace propforge
