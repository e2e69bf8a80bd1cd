#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace isaacs {

/// Malformed problem, config, or unsupported parameter combination.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Stencil reaches outside the grid.
struct DiscretizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BarrierError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Iteration budget exhausted. Carries the max-norm residual after each outer step.
struct NonConvergenceError : std::runtime_error {
    std::vector<double> residual_history;
    NonConvergenceError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), residual_history(std::move(history)) {}
};

/// Two independent realizations of the same quantity disagree.
struct CrossCheckError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutsideDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A lifted path left the surface with projection enabled.
struct SurfaceBreachError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Interpolation requested at a point the field does not cover.
struct ExtrapolationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace isaacs
