#include "taildep/coverage.hpp"

#include "taildep/format.hpp"
#include "taildep/rng.hpp"
#include "taildep/simd/kernels.hpp"
#include "taildep/tail_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace taildep {

namespace {

// n log p with the 0 log 0 = 0 convention.
double xlogy(double n, double p) { return n == 0.0 ? 0.0 : n * std::log(p); }

constexpr double kTauStarCeiling = 1.0 - 1e-6;

}  // namespace

double kupiec_statistic(std::size_t T, std::size_t m, double tau) {
    if (T == 0) throw std::invalid_argument("kupiec: T must be positive");
    if (m > T) throw std::invalid_argument("kupiec: more violations than days");
    if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("kupiec: tau must lie in (0, 1)");
    const double t = static_cast<double>(T);
    const double v = static_cast<double>(m);
    const double hit = v / t;
    const double fitted = xlogy(t - v, 1.0 - hit) + xlogy(v, hit);
    const double null = xlogy(t - v, 1.0 - tau) + xlogy(v, tau);
    return std::max(0.0, 2.0 * (fitted - null));
}

double solve_tau_star(std::span<const double> x, std::span<const double> y, double tau,
                      const TauStarOptions& options) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("tau* : tau must lie in (0, 1)");
    if (x.size() != y.size() || x.empty()) throw std::invalid_argument("tau*: bad sample sizes");
    std::vector<double> sx(x.begin(), x.end()), sy(y.begin(), y.end());
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    const double n = static_cast<double>(x.size());
    const auto joint = [&](double t) {
        const double qx = empirical_quantile_sorted(sx, t);
        const double qy = empirical_quantile_sorted(sy, t);
        return static_cast<double>(simd::count_joint_below(x, y, qx, qy)) / n;
    };

    double lo = tau;
    double hi = kTauStarCeiling;
    if (joint(hi) < tau) {
        throw std::runtime_error("tau*: joint probability at the upper bracket is below tau");
    }
    double mid = lo;
    double p = joint(lo);
    for (std::size_t it = 0; it < options.max_iterations && hi - lo > 1e-12; ++it) {
        mid = 0.5 * (lo + hi);
        p = joint(mid);
        if (p < tau) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // hi is the smallest level seen whose joint probability reaches tau.
    const double p_hi = joint(hi);
    const double result = std::abs(p_hi - tau) <= std::abs(p - tau) ? hi : mid;
    const double miss = std::min(std::abs(p_hi - tau), std::abs(p - tau));
    if (miss > options.tol) {
        throw ConvergenceError("tau*: joint probability misses tau by " + format_double(miss),
                               {result}, miss);
    }
    return result;
}

PairInnovationQuantiles pair_quantiles(std::span<const double> x, std::span<const double> y,
                                       double tau, const TauStarOptions& options) {
    PairInnovationQuantiles q;
    q.tau_star = solve_tau_star(x, y, tau, options);
    q.q_i = empirical_quantile(x, q.tau_star);
    q.q_j = empirical_quantile(y, q.tau_star);
    return q;
}

std::vector<bool> violation_sequence(std::span<const double> r_i, std::span<const double> r_j,
                                     const GarchFit& fit_i, const GarchFit& fit_j, double q_i,
                                     double q_j) {
    if (r_i.size() != r_j.size()) throw std::invalid_argument("violations: length mismatch");
    std::vector<bool> hits(r_i.size());
    GarchState si = fit_i.last_state;
    GarchState sj = fit_j.last_state;
    for (std::size_t t = 0; t < r_i.size(); ++t) {
        const Forecast fi = garch_forecast(fit_i.params, si);
        const Forecast fj = garch_forecast(fit_j.params, sj);
        hits[t] = r_i[t] < fi.mu + fi.sigma * q_i && r_j[t] < fj.mu + fj.sigma * q_j;
        si = garch_advance(fit_i.params, si, r_i[t]);
        sj = garch_advance(fit_j.params, sj, r_j[t]);
    }
    return hits;
}

std::vector<CoverageResult> pairwise_coverage_matrix(const Matrix& test_returns,
                                                     std::span<const GarchFit> fits,
                                                     const PairSampler& sampler,
                                                     const CoverageOptions& options) {
    const std::size_t n = test_returns.cols();
    if (n < 2) throw std::invalid_argument("coverage: need at least two series");
    if (fits.size() != n) throw std::invalid_argument("coverage: one GARCH fit per series required");
    std::vector<CoverageResult> out;
    std::size_t pair_index = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j, ++pair_index) {
            const Matrix sample = sampler(i, j, options.n_samples, derive_seed(options.seed, pair_index));
            if (sample.cols() != 2) throw std::logic_error("coverage: pair sampler must return two columns");
            const auto q = pair_quantiles(sample.col(0), sample.col(1), options.tau, options.tau_star);
            const auto hits = violation_sequence(test_returns.col(i), test_returns.col(j), fits[i],
                                                 fits[j], q.q_i, q.q_j);
            CoverageResult r;
            r.i = i;
            r.j = j;
            r.tau = options.tau;
            r.tau_star = q.tau_star;
            r.T = hits.size();
            r.violations = static_cast<std::size_t>(std::count(hits.begin(), hits.end(), true));
            r.statistic = kupiec_statistic(r.T, r.violations, r.tau);
            r.reject_95 = r.statistic > kKupiecCritical95;
            out.push_back(r);
        }
    }
    return out;
}

void write_coverage_csv(std::ostream& out, std::span<const CoverageResult> results) {
    out << "pair_i,pair_j,tau,tau_star,T,violations,ideal_violations,statistic,reject_95\n";
    for (const auto& r : results) {
        out << r.i << ',' << r.j << ',' << format_double(r.tau) << ',' << format_double(r.tau_star)
            << ',' << r.T << ',' << r.violations << ',' << format_double(r.ideal_violations()) << ','
            << format_double(r.statistic) << ',' << (r.reject_95 ? 1 : 0) << '\n';
    }
}

}  // namespace taildep
