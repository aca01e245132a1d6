#pragma once

#include <stdexcept>
#include <string>

namespace urdcop {

/// Input text could not be parsed (JSON syntax or missing/ill-typed fields).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Model invariants violated (see validate_instance for the full report).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised by solvers that require an acyclic factor graph when cycles are
/// present and best-effort mode was not requested.
class CyclicGraphError : public std::runtime_error {
public:
    explicit CyclicGraphError(const std::string& what) : std::runtime_error(what) {}
};

/// Exhaustive-search guard tripped: the joint assignment space is too large.
class GuardExceededError : public std::runtime_error {
public:
    explicit GuardExceededError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace urdcop
