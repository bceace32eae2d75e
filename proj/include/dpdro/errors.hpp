#pragma once

#include <stdexcept>
#include <string>

namespace dpdro {

/// Criterion value left the numerically meaningful range during a fit.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// phi_beta would overflow a double (t / beta too large).
struct PhiOverflowError : std::runtime_error {
    explicit PhiOverflowError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed spec file, CSV cell, or CLI configuration.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure (missing input, unwritable output).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace dpdro
