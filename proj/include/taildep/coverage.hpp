#pragma once

// Two-dimensional coverage backtest. For a pair (X, Y) the level tau* solves
//   P{X < Q_X(tau*), Y < Q_Y(tau*)} = tau
// and a test day is a violation when both returns fall below their
// conditional tau* quantiles. Violation counts are scored with Kupiec's
// unconditional coverage likelihood ratio.

#include "taildep/common.hpp"
#include "taildep/garch.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace taildep {

/// chi-square(1) 95% critical value.
inline constexpr double kKupiecCritical95 = 3.84;

/// 2 log L(m/T) - 2 log L(tau) with 0 log 0 = 0.
[[nodiscard]] double kupiec_statistic(std::size_t T, std::size_t m, double tau);

struct TauStarOptions {
    double tol = 1e-4;
    std::size_t max_iterations = 60;
};

/// Bisection for tau* on the empirical joint lower-orthant probability of
/// one fixed sample (x_k, y_k). Throws std::runtime_error if the probability
/// at the upper bracket 1 - 1e-6 is still below tau, and ConvergenceError if
/// the final probability misses tau by more than tol.
[[nodiscard]] double solve_tau_star(std::span<const double> x, std::span<const double> y, double tau,
                                    const TauStarOptions& options = {});

/// Draws n x 2 innovation samples for the pair (i, j).
using PairSampler =
    std::function<Matrix(std::size_t i, std::size_t j, std::size_t n, std::uint64_t seed)>;

struct PairInnovationQuantiles {
    double tau_star = 0.0;
    double q_i = 0.0;  // innovation quantile of i at tau*
    double q_j = 0.0;
};

/// tau* and the two marginal innovation quantiles from one model sample.
[[nodiscard]] PairInnovationQuantiles pair_quantiles(std::span<const double> x,
                                                     std::span<const double> y, double tau,
                                                     const TauStarOptions& options = {});

/// Violation flags over a test window. GARCH parameters stay frozen; each
/// series' state starts at its fit's last_state and rolls through the window.
[[nodiscard]] std::vector<bool> violation_sequence(std::span<const double> r_i,
                                                   std::span<const double> r_j,
                                                   const GarchFit& fit_i, const GarchFit& fit_j,
                                                   double q_i, double q_j);

struct CoverageResult {
    std::size_t i = 0;
    std::size_t j = 0;
    double tau = 0.0;
    double tau_star = 0.0;
    std::size_t T = 0;
    std::size_t violations = 0;
    double statistic = 0.0;
    bool reject_95 = false;

    [[nodiscard]] double ideal_violations() const noexcept { return tau * static_cast<double>(T); }
};

struct CoverageOptions {
    double tau = 0.01;
    std::size_t n_samples = 1000000;
    std::uint64_t seed = 0;
    TauStarOptions tau_star;
};

/// One result per unordered pair i < j in lexicographic order.
[[nodiscard]] std::vector<CoverageResult> pairwise_coverage_matrix(
    const Matrix& test_returns, std::span<const GarchFit> fits, const PairSampler& sampler,
    const CoverageOptions& options = {});

/// Header: pair_i,pair_j,tau,tau_star,T,violations,ideal_violations,statistic,reject_95
void write_coverage_csv(std::ostream& out, std::span<const CoverageResult> results);

}  // namespace taildep
