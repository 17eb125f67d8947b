#pragma once

#include <stdexcept>
#include <string>

namespace podgp {

/// Bad or incomplete run configuration (missing keys, malformed values).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Input data violates a precondition or an invariant (parse failures,
/// degenerate cells, dimension mismatches, missing files).
struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (rank deficiency, non-SPD factorization, divergence).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace podgp
