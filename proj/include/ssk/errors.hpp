#pragma once

#include <stdexcept>
#include <string>

namespace ssk {

// Configuration / input errors map to CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Domain violations of an operation's preconditions.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures (non-convergence, poles, branch cuts, quadrature).
// Maps to CLI exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ssk
