#pragma once

// Recursive learning of the triangular and one-factor models.
//
// Stage i fits column i against the latents recovered in stages 1..i-1:
//   1. for every j < i solve the moment equations
//        mean(y_i z_j^l) = sigma_ij * mean(z_j^l g(z_j | u_ij, v_ij)),  l = 1, 3, 5
//      (optionally also l = 2, 4)
//   2. subtract the fitted terms, y' = y_i - sum_j sigma_ij g(z_j | u_ij, v_ij)
//   3. fit an HTQF to y' by quantile regression over a grid of levels
//   4. invert the fitted HTQF to recover z_i.

#include "taildep/common.hpp"
#include "taildep/dependence_models.hpp"
#include "taildep/htqf.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace taildep {

class QuantileGrid {
public:
    /// {0.01, 0.02, ..., 0.99}
    static QuantileGrid levels99();
    /// {0.01, 0.05, 0.10, ..., 0.90, 0.95, 0.99}
    static QuantileGrid levels21();
    /// Throws std::invalid_argument unless strictly increasing inside (0, 1).
    explicit QuantileGrid(std::vector<double> levels);

    [[nodiscard]] const std::vector<double>& levels() const noexcept { return levels_; }
    [[nodiscard]] std::size_t size() const noexcept { return levels_.size(); }

private:
    std::vector<double> levels_;
};

struct LearningOptions {
    std::size_t min_samples = 200;
    std::size_t restarts = 5;
    // Quantile regression is considered solved when the objective improves by
    // less than this (relative to the data scale) over 200 iterations.
    double stall_tolerance = 1e-9;
    // Relative residual below which a moment system counts as exactly solved.
    double moment_tolerance = 1e-6;
    // Also match the centered even moments l = 2, 4. The odd orders alone
    // identify ln u and ln v only to second order around u = v = 1.
    bool even_moments = true;
};

struct UnivariateFit {
    HtqfParams params;
    double objective = 0.0;  // mean pinball loss summed over the grid
    std::size_t iterations = 0;
    bool converged = false;
};

/// Mean pinball loss (1/K) sum_k sum_tau L_tau(y_k, Q(tau | params)).
[[nodiscard]] double pinball_objective(std::span<const double> data, const QuantileGrid& grid,
                                       const HtqfParams& params, const LatentLaw& law);

/// Quantile-regression fit of (mu, sigma, u, v) with A fixed.
/// Throws std::invalid_argument for too few or degenerate samples and
/// ConvergenceError when no restart converges.
[[nodiscard]] UnivariateFit fit_univariate_htqf(std::span<const double> data,
                                                const QuantileGrid& grid, const LatentLaw& law,
                                                double A = kDefaultA,
                                                const LearningOptions& options = {});

struct MomentFit {
    double sigma = 0.0;
    double u = 1.0;
    double v = 1.0;
    double residual = 0.0;  // ||r / s|| / ||c / s|| over the matched orders
    std::size_t iterations = 0;
    bool exact = false;  // residual within LearningOptions::moment_tolerance
};

/// Solves the moment equations of y on latent z for (sigma, u, v): orders
/// l = 1, 3, 5, plus 2 and 4 when options.even_moments is set. When the system
/// has no exact root the constrained least-squares minimizer is returned with
/// exact = false.
[[nodiscard]] MomentFit solve_moment_system(std::span<const double> y, std::span<const double> z,
                                            double A = kDefaultA,
                                            const LearningOptions& options = {});

/// Reduced form: (u, v) fixed, sigma from the l = 1 equation alone.
[[nodiscard]] MomentFit solve_moment_system_fixed(std::span<const double> y,
                                                  std::span<const double> z, double u, double v,
                                                  double A = kDefaultA);

/// z_k = g^{-1}((y'_k - mu) / sigma | u, v).
[[nodiscard]] std::vector<double> invert_latent(std::span<const double> y_prime,
                                                const HtqfParams& params);

struct StageDiagnostics {
    std::size_t stage = 0;    // target column
    long partner = -1;        // latent column for moment stages, -1 for quantile stages
    std::string kind;         // "quantile" or "moment"
    double objective = 0.0;   // pinball loss or relative moment residual
    std::size_t iterations = 0;
    bool converged = false;
};

template <class Model>
struct FitReport {
    Model model;
    Matrix latents;  // K x (number of latents)
    std::vector<StageDiagnostics> stages;
};

using TriangularFitReport = FitReport<TriangularModel>;
using OneFactorFitReport = FitReport<OneFactorModel>;

/// Raised when a stage fails; carries the failing stage and the diagnostics
/// of the stages completed before it.
class StageError : public std::runtime_error {
public:
    StageError(std::size_t stage, const std::string& what, std::vector<StageDiagnostics> done)
        : std::runtime_error("stage " + std::to_string(stage) + ": " + what),
          stage_(stage), done_(std::move(done)) {}
    [[nodiscard]] std::size_t stage() const noexcept { return stage_; }
    [[nodiscard]] const std::vector<StageDiagnostics>& completed() const noexcept { return done_; }

private:
    std::size_t stage_;
    std::vector<StageDiagnostics> done_;
};

[[nodiscard]] TriangularFitReport fit_triangular(const Matrix& data, const QuantileGrid& grid,
                                                 const LatentLaw& law, bool reduced,
                                                 double A = kDefaultA,
                                                 const LearningOptions& options = {});

/// market: K values of the market variable; assets: K x n.
[[nodiscard]] OneFactorFitReport fit_onefactor(std::span<const double> market,
                                               const Matrix& assets, const QuantileGrid& grid,
                                               const LatentLaw& law, double A = kDefaultA,
                                               const LearningOptions& options = {});

/// Header: stage,partner,kind,objective,iterations,converged
void write_diagnostics_csv(std::ostream& out, std::span<const StageDiagnostics> stages);

}  // namespace taildep
