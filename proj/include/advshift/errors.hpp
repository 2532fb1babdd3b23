#pragma once

#include <stdexcept>
#include <string>

namespace advshift {

// Invalid numeric domain: off-simplex inputs, zero-mass divisors, boundary
// points passed to operations that need interior ones.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Tensor shape mismatch between model parameters and inputs.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Bad training/CLI configuration (unknown method, missing class, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; message carries the line number.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solver ran out of budget; message carries the final residual.
class NonConvergence : public std::runtime_error {
public:
    explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace advshift
