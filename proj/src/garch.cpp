#include "taildep/garch.hpp"

#include "taildep/common.hpp"
#include "taildep/format.hpp"
#include "taildep/nelder_mead.hpp"
#include "taildep/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace taildep {

namespace {

constexpr std::size_t kBurnIn = 1000;
constexpr double kPersistenceCap = 1.0 - 1e-4;
constexpr double kMaxNu = 500.0;

double sample_variance(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / (n - 1.0);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// Walks the recursion, calling step(t, mu_t, sigma2_t) for every t.
template <class Step>
void recurse(std::span<const double> r, const GarchParams& p, const GarchStart& start, Step&& step) {
    double mu = start.mu;
    double s2 = start.sigma2;
    for (std::size_t t = 0; t < r.size(); ++t) {
        if (t > 0) {
            const double a = r[t - 1] - mu;
            mu = p.gamma0 + p.gamma1 * r[t - 1];
            s2 = p.beta0 + p.beta1 * a * a + p.beta2 * s2;
        }
        step(t, mu, s2);
    }
}

}  // namespace

void GarchParams::validate() const {
    if (!(beta0 > 0.0)) throw std::invalid_argument("garch: beta0 must be positive");
    if (!(beta1 >= 0.0) || !(beta2 >= 0.0)) {
        throw std::invalid_argument("garch: beta1 and beta2 must be non-negative");
    }
    if (!(beta1 + beta2 < 1.0)) throw std::invalid_argument("garch: beta1 + beta2 must be below 1");
    if (!(std::abs(gamma1) < 1.0)) throw std::invalid_argument("garch: |gamma1| must be below 1");
    if (!(nu > 2.0)) throw std::invalid_argument("garch: nu must exceed 2");
    if (!std::isfinite(gamma0)) throw std::invalid_argument("garch: gamma0 must be finite");
}

GarchStart default_start(std::span<const double> returns, const GarchParams& params) {
    if (returns.size() < 2) throw std::invalid_argument("garch: series too short");
    return {params.gamma0 / (1.0 - params.gamma1), sample_variance(returns)};
}

GarchStart stationary_start(const GarchParams& params) {
    params.validate();
    return {params.gamma0 / (1.0 - params.gamma1),
            params.beta0 / (1.0 - params.beta1 - params.beta2)};
}

double garch_loglik(std::span<const double> returns, const GarchParams& p) {
    const GarchStart start = default_start(returns, p);
    const double c = std::lgamma((p.nu + 1.0) / 2.0) - std::lgamma(p.nu / 2.0) -
                     0.5 * std::log(std::numbers::pi * (p.nu - 2.0));
    const double k = (p.nu + 1.0) / 2.0;
    double ll = 0.0;
    recurse(returns, p, start, [&](std::size_t t, double mu, double s2) {
        if (t == 0) return;
        const double a = returns[t] - mu;
        ll += c - 0.5 * std::log(s2) - k * std::log1p(a * a / (s2 * (p.nu - 2.0)));
    });
    return ll;
}

GarchFit garch_fit(std::span<const double> returns, const GarchFitOptions& options) {
    if (returns.size() < options.min_length) {
        throw std::invalid_argument("garch: need at least " + std::to_string(options.min_length) +
                                    " returns, got " + std::to_string(returns.size()));
    }
    for (double r : returns) {
        if (!std::isfinite(r)) throw std::invalid_argument("garch: non-finite return");
    }
    const double var = sample_variance(returns);
    if (!(var > 0.0)) throw std::invalid_argument("garch: zero variance series");
    const double sd = std::sqrt(var);
    const double mean = std::accumulate(returns.begin(), returns.end(), 0.0) /
                        static_cast<double>(returns.size());
    const double T = static_cast<double>(returns.size());

    const auto unpack = [&](std::span<const double> x) {
        GarchParams p;
        p.gamma0 = sd * x[0];
        p.gamma1 = 0.999 * std::tanh(x[1]);
        p.beta0 = var * std::exp(x[2]);
        const double persistence = kPersistenceCap * sigmoid(x[3]);
        const double w = sigmoid(x[4]);
        p.beta1 = persistence * w;
        p.beta2 = persistence * (1.0 - w);
        p.nu = 2.0 + std::min(std::exp(x[5]), kMaxNu - 2.0);
        return p;
    };
    const auto f = [&](std::span<const double> x) { return -garch_loglik(returns, unpack(x)) / T; };

    const std::vector<double> init{mean / sd, 0.0, std::log(0.05), logit(0.95 / kPersistenceCap),
                                   logit(0.05 / 0.95), std::log(6.0)};
    const std::array<double, 6> step{0.1, 0.1, 0.5, 0.5, 0.5, 0.5};
    NelderMeadOptions nm;
    nm.max_iterations = 20000;
    nm.stall_tolerance = 1e-10;

    NelderMeadResult best;
    best.value = std::numeric_limits<double>::infinity();
    bool converged = false;
    std::size_t iterations = 0;
    Engine engine(0x6a7c4ULL);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    for (std::size_t run = 0; run < std::max<std::size_t>(1, options.restarts); ++run) {
        std::vector<double> start = init;
        if (run > 0) {
            start = best.x;
            for (std::size_t k = 0; k < start.size(); ++k) start[k] += 0.5 * step[k] * jitter(engine);
        }
        const auto res = nelder_mead(f, start, step, nm);
        iterations += res.iterations;
        converged = converged || res.converged;
        if (res.value < best.value) best = res;
    }
    const GarchParams p = unpack(best.x);
    if (!converged || !std::isfinite(best.value)) {
        throw ConvergenceError("garch: likelihood maximization did not converge",
                               {p.gamma0, p.gamma1, p.beta0, p.beta1, p.beta2, p.nu},
                               -best.value * T);
    }

    GarchFit fit;
    fit.params = p;
    fit.loglik = -best.value * T;
    fit.iterations = iterations;
    fit.last_state = garch_final_state(returns, p);
    fit.near_integrated = p.beta1 + p.beta2 > 0.999;
    if (fit.near_integrated) {
        warn("garch: nearly integrated variance, beta1 + beta2 = " + format_double(p.beta1 + p.beta2));
    }
    return fit;
}

std::vector<double> garch_filter(std::span<const double> returns, const GarchParams& params) {
    return garch_filter(returns, params, default_start(returns, params));
}

std::vector<double> garch_filter(std::span<const double> returns, const GarchParams& params,
                                 const GarchStart& start) {
    params.validate();
    std::vector<double> eps(returns.size());
    recurse(returns, params, start, [&](std::size_t t, double mu, double s2) {
        eps[t] = (returns[t] - mu) / std::sqrt(s2);
    });
    return eps;
}

GarchState garch_final_state(std::span<const double> returns, const GarchParams& params) {
    GarchState state;
    const GarchStart start = default_start(returns, params);
    recurse(returns, params, start, [&](std::size_t t, double mu, double s2) {
        if (t + 1 == returns.size()) state = {s2, (returns[t] - mu) / std::sqrt(s2), returns[t]};
    });
    return state;
}

Forecast garch_forecast(const GarchParams& p, const GarchState& state) {
    const double a2 = state.sigma2 * state.eps * state.eps;
    const double s2 = p.beta0 + p.beta1 * a2 + p.beta2 * state.sigma2;
    return {p.gamma0 + p.gamma1 * state.r, std::sqrt(s2)};
}

Forecast garch_forecast(const GarchFit& fit) { return garch_forecast(fit.params, fit.last_state); }

GarchState garch_advance(const GarchParams& params, const GarchState& state, double r) {
    const Forecast f = garch_forecast(params, state);
    return {f.sigma * f.sigma, (r - f.mu) / f.sigma, r};
}

GarchSimulation garch_drive(const GarchParams& params, std::span<const double> innovations,
                            const GarchStart& start) {
    params.validate();
    GarchSimulation sim;
    sim.start = start;
    sim.innovations.assign(innovations.begin(), innovations.end());
    sim.returns.resize(innovations.size());
    double mu = start.mu;
    double s2 = start.sigma2;
    for (std::size_t t = 0; t < innovations.size(); ++t) {
        if (t > 0) {
            const double a = sim.returns[t - 1] - mu;
            mu = params.gamma0 + params.gamma1 * sim.returns[t - 1];
            s2 = params.beta0 + params.beta1 * a * a + params.beta2 * s2;
        }
        sim.returns[t] = mu + std::sqrt(s2) * innovations[t];
    }
    return sim;
}

GarchSimulation garch_simulate(const GarchParams& params, std::size_t T, std::uint64_t seed) {
    params.validate();
    Engine engine(derive_seed(seed, 0));
    std::student_t_distribution<double> t(params.nu);
    const double unit = std::sqrt((params.nu - 2.0) / params.nu);
    std::vector<double> eps(kBurnIn + T);
    for (double& e : eps) e = unit * t(engine);

    const auto full = garch_drive(params, eps, stationary_start(params));
    GarchSimulation sim;
    sim.returns.assign(full.returns.begin() + kBurnIn, full.returns.end());
    sim.innovations.assign(eps.begin() + kBurnIn, eps.end());
    // Conditional moments of the first kept observation.
    const std::size_t b = kBurnIn;
    double mu = 0.0, s2 = 0.0;
    recurse(std::span<const double>(full.returns).first(b + 1), params, stationary_start(params),
            [&](std::size_t k, double m, double v) {
                if (k == b) {
                    mu = m;
                    s2 = v;
                }
            });
    sim.start = {mu, s2};
    return sim;
}

}  // namespace taildep
