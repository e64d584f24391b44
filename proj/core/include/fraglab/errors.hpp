#pragma once

#include <stdexcept>
#include <string>

namespace fraglab {

/// Malformed or incomplete configuration (CLI exit code 1).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A structural assumption or parameter constraint is violated (CLI exit code 2).
struct ConstraintError : std::runtime_error {
    explicit ConstraintError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-convergence, positivity loss, CFL violation and friends (CLI exit code 3).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fraglab
