#pragma once

#include <functional>
#include <span>
#include <stdexcept>

#include "mixdag/linalg.hpp"
#include "mixdag/normal.hpp"

namespace mixdag {

class InvalidStartError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Objective to minimize. Writes the gradient into `grad` (already sized) and
/// returns the value; may return a non-finite value to reject a trial point.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct QuasiNewtonOptions {
    int history = 10;
    int max_iterations = 200;
    double pg_tolerance = 1e-6;
};

struct QuasiNewtonResult {
    Vector x;
    double value = 0.0;
    double projected_gradient = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Limited-memory BFGS with gradient projection onto the box `bounds` (closed
/// on finite ends) and Armijo backtracking along the projected path.
QuasiNewtonResult boxed_quasi_newton(const Objective& objective, Vector x0, std::span<const Interval> bounds,
                                     const QuasiNewtonOptions& options = {});

}  // namespace mixdag
