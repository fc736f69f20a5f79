#pragma once

// AR(1)-GARCH(1,1) with unit-variance Student t innovations:
//   r_t      = mu_t + sigma_t * eps_t
//   mu_t     = gamma0 + gamma1 * r_{t-1}
//   sigma2_t = beta0 + beta1 * (sigma_{t-1} eps_{t-1})^2 + beta2 * sigma2_{t-1}

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace taildep {

struct GarchParams {
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double beta0 = 1.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double nu = 8.0;

    /// Throws std::invalid_argument unless beta0 > 0, beta1, beta2 >= 0,
    /// beta1 + beta2 < 1, |gamma1| < 1 and nu > 2.
    void validate() const;
};

/// Conditional variance, innovation and return of the latest observed day.
struct GarchState {
    double sigma2 = 1.0;
    double eps = 0.0;
    double r = 0.0;
};

/// Conditional mean and variance of the first observation of a series.
struct GarchStart {
    double mu = 0.0;
    double sigma2 = 1.0;
};

struct GarchFit {
    GarchParams params;
    GarchState last_state;
    double loglik = 0.0;
    std::size_t iterations = 0;
    bool near_integrated = false;  // beta1 + beta2 > 0.999
};

struct Forecast {
    double mu = 0.0;
    double sigma = 1.0;
};

struct GarchFitOptions {
    std::size_t min_length = 500;
    std::size_t restarts = 3;
};

/// Default start for a series: unconditional AR mean and the sample variance.
[[nodiscard]] GarchStart default_start(std::span<const double> returns, const GarchParams& params);

/// Exact log-likelihood of observations 2..T (the first one conditions the AR term).
[[nodiscard]] double garch_loglik(std::span<const double> returns, const GarchParams& params);

/// Maximum likelihood fit. Throws std::invalid_argument on short or constant
/// series and ConvergenceError when no restart converges. Warns when the
/// fitted variance process is nearly integrated.
[[nodiscard]] GarchFit garch_fit(std::span<const double> returns,
                                 const GarchFitOptions& options = {});

/// Standardized residuals eps_t = (r_t - mu_t) / sigma_t for t = 1..T.
[[nodiscard]] std::vector<double> garch_filter(std::span<const double> returns,
                                               const GarchParams& params);
[[nodiscard]] std::vector<double> garch_filter(std::span<const double> returns,
                                               const GarchParams& params, const GarchStart& start);

/// One-step-ahead conditional mean and scale.
[[nodiscard]] Forecast garch_forecast(const GarchParams& params, const GarchState& state);
[[nodiscard]] Forecast garch_forecast(const GarchFit& fit);

/// Observes return r for the day forecast from `state` and returns the new state.
[[nodiscard]] GarchState garch_advance(const GarchParams& params, const GarchState& state, double r);

/// Final state after filtering a whole series.
[[nodiscard]] GarchState garch_final_state(std::span<const double> returns,
                                           const GarchParams& params);

struct GarchSimulation {
    std::vector<double> returns;
    std::vector<double> innovations;
    GarchStart start;  // conditional moments of returns[0]
};

/// Runs the recursion forward from `start` with the given innovations.
[[nodiscard]] GarchSimulation garch_drive(const GarchParams& params,
                                          std::span<const double> innovations,
                                          const GarchStart& start);

/// Stationary start: unconditional mean and variance of the process.
[[nodiscard]] GarchStart stationary_start(const GarchParams& params);

/// Simulates T observations after a 1000-step burn-in.
[[nodiscard]] GarchSimulation garch_simulate(const GarchParams& params, std::size_t T,
                                             std::uint64_t seed);

}  // namespace taildep
