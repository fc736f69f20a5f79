#include "taildep/learning.hpp"

#include "taildep/format.hpp"
#include "taildep/nelder_mead.hpp"
#include "taildep/rng.hpp"
#include "taildep/simd/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace taildep {

namespace {

constexpr double kTailSpan = kTailParamMax - 1.0;

// Tail parameters live on (1, 64) through a logistic map so the optimizer
// never leaves the admissible box.
double tail_from_free(double a) { return 1.0 + kTailSpan / (1.0 + std::exp(-a)); }
double free_from_tail(double u) {
    const double p = std::clamp((u - 1.0) / kTailSpan, 1e-12, 1.0 - 1e-12);
    return std::log(p / (1.0 - p));
}

// Exact pinball objective from sorted data and prefix sums:
//   sum_k L_tau(y_k, q) = tau (S - K q) - (S_{<q} - n_{<q} q)
class PinballEvaluator {
public:
    PinballEvaluator(std::vector<double> sorted, const QuantileGrid& grid, const LatentLaw& law)
        : sorted_(std::move(sorted)), prefix_(sorted_.size() + 1, 0.0L) {
        for (std::size_t k = 0; k < sorted_.size(); ++k) prefix_[k + 1] = prefix_[k] + sorted_[k];
        for (double tau : grid.levels()) {
            taus_.push_back(tau);
            latent_q_.push_back(law.quantile(tau));
        }
    }

    double operator()(double mu, double sigma, double u, double v, double A) const {
        const auto K = static_cast<long double>(sorted_.size());
        const long double total = prefix_.back();
        long double sum = 0.0L;
        for (std::size_t t = 0; t < taus_.size(); ++t) {
            const double q = mu + sigma * g_transform(latent_q_[t], u, v, A);
            const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), q);
            const auto n_lt = static_cast<std::size_t>(it - sorted_.begin());
            const long double lq = q;
            sum += taus_[t] * (total - K * lq) - (prefix_[n_lt] - static_cast<long double>(n_lt) * lq);
        }
        return static_cast<double>(sum / K);
    }

private:
    std::vector<double> sorted_;
    std::vector<long double> prefix_;
    std::vector<double> taus_;
    std::vector<double> latent_q_;
};

double sample_median(std::vector<double> sorted_copy) {
    return sorted_copy[(sorted_copy.size() - 1) / 2];
}

}  // namespace

QuantileGrid::QuantileGrid(std::vector<double> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw std::invalid_argument("quantile grid is empty");
    for (std::size_t k = 0; k < levels_.size(); ++k) {
        if (!(levels_[k] > 0.0 && levels_[k] < 1.0)) {
            throw std::invalid_argument("quantile grid levels must lie in (0, 1)");
        }
        if (k > 0 && !(levels_[k] > levels_[k - 1])) {
            throw std::invalid_argument("quantile grid levels must be strictly increasing");
        }
    }
}

QuantileGrid QuantileGrid::levels99() {
    std::vector<double> l;
    for (int k = 1; k <= 99; ++k) l.push_back(k / 100.0);
    return QuantileGrid(std::move(l));
}

QuantileGrid QuantileGrid::levels21() {
    std::vector<double> l{0.01};
    for (int k = 1; k <= 19; ++k) l.push_back(k / 20.0);
    l.push_back(0.99);
    return QuantileGrid(std::move(l));
}

double pinball_objective(std::span<const double> data, const QuantileGrid& grid,
                         const HtqfParams& params, const LatentLaw& law) {
    if (data.empty()) throw std::invalid_argument("pinball_objective: empty data");
    double total = 0.0;
    for (double tau : grid.levels()) {
        const double q = htqf_quantile(tau, params, law);
        for (double y : data) total += (tau - (y < q ? 1.0 : 0.0)) * (y - q);
    }
    return total / static_cast<double>(data.size());
}

UnivariateFit fit_univariate_htqf(std::span<const double> data, const QuantileGrid& grid,
                                  const LatentLaw& law, double A, const LearningOptions& options) {
    validate_tail_params(1.0, 1.0, A);
    if (data.size() < options.min_samples) {
        throw std::invalid_argument("quantile regression needs at least " +
                                    std::to_string(options.min_samples) + " samples, got " +
                                    std::to_string(data.size()));
    }
    for (double y : data) {
        if (!std::isfinite(y)) throw std::invalid_argument("quantile regression: non-finite sample");
    }

    // Work on standardized data so tolerances are scale free. The pinball loss
    // is shift invariant and scales linearly, so the map back is exact.
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    const double center = sample_median(sorted);
    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    double ss = 0.0;
    for (double y : sorted) ss += (y - mean) * (y - mean);
    const double scale = std::sqrt(ss / static_cast<double>(sorted.size() - 1));
    if (!(scale > 1e-300) || sorted.front() == sorted.back()) {
        throw std::invalid_argument("degenerate sample (zero scale)");
    }
    for (double& y : sorted) y = (y - center) / scale;

    const PinballEvaluator objective(std::move(sorted), grid, law);
    const auto f = [&](std::span<const double> x) {
        return objective(x[0], std::exp(x[1]), tail_from_free(x[2]), tail_from_free(x[3]), A);
    };

    const double a0 = free_from_tail(1.1);
    const std::vector<double> init{0.0, -std::log1p(2.0 / A), a0, a0};
    const std::array<double, 4> step{0.1, 0.2, 1.0, 1.0};

    NelderMeadOptions nm;
    nm.stall_tolerance = options.stall_tolerance;
    nm.max_iterations = 20000;

    NelderMeadResult best;
    best.value = std::numeric_limits<double>::infinity();
    bool any_converged = false;
    std::size_t iterations = 0;
    Engine engine(0x5eedULL);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    const std::size_t runs = std::max<std::size_t>(1, options.restarts);
    for (std::size_t r = 0; r < runs; ++r) {
        std::vector<double> start = init;
        if (r > 0) {
            start = best.x;
            for (std::size_t k = 0; k < 4; ++k) start[k] += step[k] * jitter(engine);
        }
        const auto res = nelder_mead(f, start, step, nm);
        iterations += res.iterations;
        any_converged = any_converged || res.converged;
        if (res.value < best.value) best = res;
    }
    if (!any_converged) {
        std::vector<double> out{center + scale * best.x[0], scale * std::exp(best.x[1]),
                                tail_from_free(best.x[2]), tail_from_free(best.x[3])};
        throw ConvergenceError("quantile regression did not converge", std::move(out),
                               scale * best.value);
    }

    UnivariateFit fit;
    fit.params = {center + scale * best.x[0], scale * std::exp(best.x[1]),
                  tail_from_free(best.x[2]), tail_from_free(best.x[3]), A};
    fit.objective = scale * best.value;
    fit.iterations = iterations;
    fit.converged = true;
    return fit;
}

namespace {

// Sample moment equations of y on a fixed latent column z. Both sides are
// centered so that a location shift in y has no effect.
class MomentProblem {
public:
    MomentProblem(std::span<const double> y, std::span<const double> z, double A, bool even)
        : z_(z), A_(A), K_(static_cast<double>(z.size())) {
        if (y.size() != z.size()) throw std::invalid_argument("moment system: size mismatch");
        base_ = simd::exp_moments(z, 0.0);
        if (base_.s[2] / K_ < 1e-12) {
            throw std::invalid_argument("moment system: degenerate latent sample");
        }
        const auto cm = simd::cross_moments(y, z);
        const double y_mean = cm.yz[0] / K_;
        const double y_var = std::max(0.0, cm.yz_sq[0] / K_ - y_mean * y_mean);
        if (!(y_var > 0.0)) throw std::invalid_argument("moment system: constant response");
        // Residual l is scaled by sd(y) * sqrt(mean z^(2l)), its natural size
        // when y and z are independent.
        std::array<double, 6> z_even{};
        for (double zk : z) {
            const double z2 = zk * zk;
            double p = z2;
            for (int l = 1; l <= 5; ++l, p *= z2) z_even[l] += p;
        }
        for (int l = 0; l <= 5; ++l) {
            c_[l] = (cm.yz[l] - y_mean * base_.s[l]) / K_;
            s_[l] = std::sqrt(y_var * (l == 0 ? 1.0 : z_even[l] / K_));
        }
        orders_ = even ? std::vector<int>{1, 2, 3, 4, 5} : std::vector<int>{1, 3, 5};
    }

    // Centered mean(z^l g(z | u, v)) for l = 0..5.
    [[nodiscard]] std::array<double, 6> d(double u, double v) const {
        const auto eu = simd::exp_moments(z_, std::log(u));
        const auto ev = simd::exp_moments(z_, -std::log(v));
        std::array<double, 6> zg{};
        for (int l = 0; l <= 5; ++l) {
            zg[l] = (base_.s[l + 1] + (eu.s[l + 1] + ev.s[l + 1]) / A_) / K_;
        }
        std::array<double, 6> out{};
        for (int l = 0; l <= 5; ++l) out[l] = zg[l] - zg[0] * base_.s[l] / K_;
        return out;
    }

    struct Eval {
        double sigma;
        double rel_sq;  // squared relative residual over the active orders
    };

    // sigma enters linearly, so it is profiled out in closed form.
    [[nodiscard]] Eval profile(double u, double v) const {
        const auto dl = d(u, v);
        double num = 0.0, den = 0.0, cc = 0.0;
        for (int l : orders_) {
            const double w = 1.0 / (s_[l] * s_[l]);
            num += w * c_[l] * dl[l];
            den += w * dl[l] * dl[l];
            cc += w * c_[l] * c_[l];
        }
        const double sigma = num / den;
        double rr = 0.0;
        for (int l : orders_) {
            const double r = (c_[l] - sigma * dl[l]) / s_[l];
            rr += r * r;
        }
        return {sigma, cc > 0.0 ? rr / cc : rr};
    }

    // Mismatch of the centered l = 2 moment, which separates (u, v) from (v, u).
    [[nodiscard]] double even_mismatch(double sigma, double u, double v) const {
        return std::abs(c_[2] - sigma * d(u, v)[2]) / s_[2];
    }

    [[nodiscard]] double c(int l) const { return c_[l]; }

private:
    std::span<const double> z_;
    double A_;
    double K_;
    simd::ExpMoments base_;
    std::array<double, 6> c_{};
    std::array<double, 6> s_{};
    std::vector<int> orders_;
};

// ln u folded at zero and capped, so u = 1 is an interior point of the search
// space rather than an asymptote.
double tail_from_log(double x) { return std::exp(std::min(std::abs(x), std::log(kTailParamMax))); }

}  // namespace

MomentFit solve_moment_system(std::span<const double> y, std::span<const double> z, double A,
                              const LearningOptions& options) {
    validate_tail_params(1.0, 1.0, A);
    if (z.size() < options.min_samples) {
        throw std::invalid_argument("moment system needs at least " +
                                    std::to_string(options.min_samples) + " samples");
    }
    const MomentProblem problem(y, z, A, options.even_moments);
    const auto f = [&](std::span<const double> x) {
        return problem.profile(tail_from_log(x[0]), tail_from_log(x[1])).rel_sq;
    };

    NelderMeadOptions nm;
    nm.max_iterations = 3000;
    nm.stall_window = 100;
    nm.stall_tolerance = 1e-20;
    nm.value_tolerance = 1e-24;

    // With a symmetric latent law the odd-order equations cannot tell (u, v)
    // from (v, u), so both orientations are polished. The l = 2 moment picks
    // between them when it is not already part of the objective.
    const double x0 = std::log(1.1);
    const std::array<double, 2> step{0.3, 0.3};
    const auto first = nelder_mead(f, {x0, x0 + 0.2}, step, nm);
    const std::array<double, 2> fine{0.1, 0.1};
    const auto swapped = nelder_mead(f, {first.x[1], first.x[0]}, fine, nm);

    const auto pack = [&](const NelderMeadResult& r) {
        MomentFit m;
        m.u = tail_from_log(r.x[0]);
        m.v = tail_from_log(r.x[1]);
        const auto e = problem.profile(m.u, m.v);
        m.sigma = e.sigma;
        m.residual = std::sqrt(e.rel_sq);
        return m;
    };
    const MomentFit a = pack(first);
    const MomentFit b = pack(swapped);
    MomentFit out;
    if (options.even_moments) {
        out = a.residual <= b.residual ? a : b;
    } else {
        const double ok = std::max(options.moment_tolerance, 10.0 * std::min(a.residual, b.residual));
        if (a.residual > ok) {
            out = b;
        } else if (b.residual > ok) {
            out = a;
        } else {
            out = problem.even_mismatch(a.sigma, a.u, a.v) <= problem.even_mismatch(b.sigma, b.u, b.v)
                      ? a
                      : b;
        }
    }
    out.iterations = first.iterations + swapped.iterations;
    out.exact = out.residual <= options.moment_tolerance;
    return out;
}

MomentFit solve_moment_system_fixed(std::span<const double> y, std::span<const double> z, double u,
                                    double v, double A) {
    validate_tail_params(u, v, A);
    const MomentProblem problem(y, z, A, false);
    MomentFit m;
    m.u = u;
    m.v = v;
    m.sigma = problem.c(1) / problem.d(u, v)[1];
    m.residual = std::sqrt(problem.profile(u, v).rel_sq);
    m.exact = true;  // one equation, one unknown
    return m;
}

std::vector<double> invert_latent(std::span<const double> y_prime, const HtqfParams& params) {
    params.validate();
    std::vector<double> z(y_prime.size());
    parallel_chunks(y_prime.size(), kSampleChunk, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            z[k] = g_inverse((y_prime[k] - params.mu) / params.sigma, params.u, params.v, params.A);
        }
    });
    return z;
}

namespace {

void check_moment_law(const LatentLaw& law) {
    if (law.kind() == LatentLaw::Kind::StudentT && law.df() <= 7.0) {
        throw std::invalid_argument(
            "moment equations need finite E[z^5 g(z)]; Student t latents require df > 7");
    }
}

StageDiagnostics quantile_stage(std::size_t stage, const UnivariateFit& fit) {
    return {stage, -1, "quantile", fit.objective, fit.iterations, fit.converged};
}

StageDiagnostics moment_stage(std::size_t stage, std::size_t partner, const MomentFit& fit) {
    return {stage, static_cast<long>(partner), "moment", fit.residual, fit.iterations, fit.exact};
}

void store(Matrix& m, std::size_t col, const std::vector<double>& values) {
    std::copy(values.begin(), values.end(), m.col(col).begin());
}

}  // namespace

TriangularFitReport fit_triangular(const Matrix& data, const QuantileGrid& grid,
                                   const LatentLaw& law, bool reduced, double A,
                                   const LearningOptions& options) {
    const std::size_t K = data.rows();
    const std::size_t n = data.cols();
    if (n == 0) throw std::invalid_argument("fit_triangular: no columns");
    if (n > 1) check_moment_law(law);

    TriangularFitReport report;
    report.model = TriangularModel::independent(n);
    report.model.A = A;
    report.model.law = law;
    report.model.reduced = reduced;
    report.latents = Matrix(K, n);
    auto& m = report.model;

    for (std::size_t i = 0; i < n; ++i) {
        try {
            const auto yi = data.col(i);
            std::vector<double> y_prime(yi.begin(), yi.end());
            for (std::size_t j = 0; j < i; ++j) {
                const auto zj = report.latents.col(j);
                const MomentFit mf = reduced ? solve_moment_system_fixed(yi, zj, m.u(j, j), m.v(j, j), A)
                                             : solve_moment_system(yi, zj, A, options);
                m.sigma(i, j) = mf.sigma;
                m.u(i, j) = mf.u;
                m.v(i, j) = mf.v;
                report.stages.push_back(moment_stage(i, j, mf));
                simd::g_accumulate(zj, -mf.sigma, mf.u, mf.v, A, y_prime);
            }
            const UnivariateFit uf = fit_univariate_htqf(y_prime, grid, law, A, options);
            report.stages.push_back(quantile_stage(i, uf));
            m.mu[i] = uf.params.mu;
            m.sigma(i, i) = uf.params.sigma;
            m.u(i, i) = uf.params.u;
            m.v(i, i) = uf.params.v;
            store(report.latents, i, invert_latent(y_prime, uf.params));
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(i, e.what(), report.stages);
        }
    }
    return report;
}

OneFactorFitReport fit_onefactor(std::span<const double> market, const Matrix& assets,
                                 const QuantileGrid& grid, const LatentLaw& law, double A,
                                 const LearningOptions& options) {
    const std::size_t K = market.size();
    const std::size_t n = assets.cols();
    if (assets.rows() != K) throw std::invalid_argument("fit_onefactor: row count mismatch");
    if (n > 0) check_moment_law(law);

    OneFactorFitReport report;
    report.model.A = A;
    report.model.law = law;
    report.model.assets.resize(n);
    report.latents = Matrix(K, n + 1);

    try {
        const UnivariateFit uf = fit_univariate_htqf(market, grid, law, A, options);
        report.stages.push_back(quantile_stage(0, uf));
        report.model.market = {uf.params.mu, uf.params.sigma, uf.params.u, uf.params.v};
        store(report.latents, 0, invert_latent(market, uf.params));
    } catch (const std::exception& e) {
        throw StageError(0, e.what(), report.stages);
    }

    const auto zm = report.latents.col(0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t stage = i + 1;
        try {
            const auto yi = assets.col(i);
            const MomentFit mf = solve_moment_system(yi, zm, A, options);
            report.stages.push_back(moment_stage(stage, 0, mf));
            std::vector<double> y_prime(yi.begin(), yi.end());
            simd::g_accumulate(zm, -mf.sigma, mf.u, mf.v, A, y_prime);
            const UnivariateFit uf = fit_univariate_htqf(y_prime, grid, law, A, options);
            report.stages.push_back(quantile_stage(stage, uf));
            auto& a = report.model.assets[i];
            a = {uf.params.mu, mf.sigma, mf.u, mf.v, uf.params.sigma, uf.params.u, uf.params.v};
            store(report.latents, stage, invert_latent(y_prime, uf.params));
        } catch (const std::exception& e) {
            throw StageError(stage, e.what(), report.stages);
        }
    }
    return report;
}

void write_diagnostics_csv(std::ostream& out, std::span<const StageDiagnostics> stages) {
    out << "stage,partner,kind,objective,iterations,converged\n";
    for (const auto& s : stages) {
        out << s.stage << ',' << s.partner << ',' << s.kind << ',' << format_double(s.objective)
            << ',' << s.iterations << ',' << (s.converged ? 1 : 0) << '\n';
    }
}

}  // namespace taildep
