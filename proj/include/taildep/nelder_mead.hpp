#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace taildep {

struct NelderMeadOptions {
    std::size_t max_iterations = 5000;
    // Converged once the best value improved by less than `stall_tolerance`
    // over the last `stall_window` iterations...
    double stall_tolerance = 1e-9;
    std::size_t stall_window = 200;
    // ...or once the simplex has collapsed in both value and position.
    double value_tolerance = 1e-12;
    double position_tolerance = 1e-10;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Unconstrained Nelder-Mead minimization (standard reflection, expansion,
/// contraction and shrink coefficients). Non-finite objective values are
/// treated as +infinity, so callers can reject infeasible points by returning
/// NaN or infinity. The returned point is the best one ever evaluated.
[[nodiscard]] NelderMeadResult nelder_mead(const Objective& f, std::vector<double> start,
                                           std::span<const double> step,
                                           const NelderMeadOptions& options = {});

}  // namespace taildep
