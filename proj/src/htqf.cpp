#include "taildep/htqf.hpp"
#include "taildep/simd/kernels.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace taildep {

LatentLaw LatentLaw::student_t(double df) {
    if (!(df > 2.0) || !std::isfinite(df)) {
        throw std::invalid_argument("latent Student t needs df > 2, got " + std::to_string(df));
    }
    LatentLaw law;
    law.kind_ = Kind::StudentT;
    law.df_ = df;
    return law;
}

double LatentLaw::quantile(double tau) const {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::domain_error("quantile level must lie in (0,1), got " + std::to_string(tau));
    }
    if (kind_ == Kind::StandardNormal) {
        return boost::math::quantile(boost::math::normal_distribution<double>(), tau);
    }
    return boost::math::quantile(boost::math::students_t_distribution<double>(df_), tau);
}

double LatentLaw::cdf(double x) const {
    if (kind_ == Kind::StandardNormal) {
        return boost::math::cdf(boost::math::normal_distribution<double>(), x);
    }
    return boost::math::cdf(boost::math::students_t_distribution<double>(df_), x);
}

void LatentLaw::fill(Engine& engine, std::span<double> out) const {
    if (kind_ == Kind::StandardNormal) {
        std::normal_distribution<double> dist;
        for (double& x : out) x = dist(engine);
    } else {
        std::student_t_distribution<double> dist(df_);
        for (double& x : out) x = dist(engine);
    }
}

void validate_tail_params(double u, double v, double A) {
    if (!(A >= kMinA) || !std::isfinite(A)) {
        throw std::invalid_argument("tail constant A must be >= 3, got " + std::to_string(A));
    }
    if (!(u >= 1.0 && u <= kTailParamMax)) {
        throw std::invalid_argument("right-tail parameter u must lie in [1, 64], got " +
                                    std::to_string(u));
    }
    if (!(v >= 1.0 && v <= kTailParamMax)) {
        throw std::invalid_argument("left-tail parameter v must lie in [1, 64], got " +
                                    std::to_string(v));
    }
}

void HtqfParams::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("HTQF scale sigma must be > 0, got " + std::to_string(sigma));
    }
    if (!std::isfinite(mu)) throw std::invalid_argument("HTQF location mu must be finite");
    validate_tail_params(u, v, A);
}

namespace {

struct TailTerms {
    double up;    // u^z
    double down;  // v^-z
};

TailTerms tail_terms(double z, double log_u, double log_v) noexcept {
    return {std::exp(std::clamp(z * log_u, -simd::kExponentClamp, simd::kExponentClamp)),
            std::exp(std::clamp(-z * log_v, -simd::kExponentClamp, simd::kExponentClamp))};
}

double g_unchecked(double z, double log_u, double log_v, double inv_a) noexcept {
    const auto t = tail_terms(z, log_u, log_v);
    return z * (t.up * inv_a + t.down * inv_a + 1.0);
}

double g_prime_unchecked(double z, double log_u, double log_v, double inv_a) noexcept {
    const auto t = tail_terms(z, log_u, log_v);
    return (t.up + t.down) * inv_a + 1.0 + z * (log_u * t.up - log_v * t.down) * inv_a;
}

}  // namespace

double g_transform(double z, double u, double v, double A) {
    validate_tail_params(u, v, A);
    return g_unchecked(z, std::log(u), std::log(v), 1.0 / A);
}

double g_derivative(double z, double u, double v, double A) {
    validate_tail_params(u, v, A);
    return g_prime_unchecked(z, std::log(u), std::log(v), 1.0 / A);
}

double g_inverse(double y, double u, double v, double A) {
    validate_tail_params(u, v, A);
    if (!std::isfinite(y)) throw std::invalid_argument("g_inverse: y must be finite");
    if (y == 0.0) return 0.0;

    const double log_u = std::log(u);
    const double log_v = std::log(v);
    const double inv_a = 1.0 / A;

    double lo = std::min(0.0, y);
    double hi = std::max(0.0, y);
    double z = std::clamp(y / (1.0 + 2.0 * inv_a), lo, hi);
    double prev_step = hi - lo;
    for (int iter = 0; iter < 400; ++iter) {
        const double f = g_unchecked(z, log_u, log_v, inv_a) - y;
        if (f == 0.0) return z;
        if (f > 0.0) {
            hi = z;
        } else {
            lo = z;
        }
        const double slope = g_prime_unchecked(z, log_u, log_v, inv_a);
        double next = z - f / slope;
        // Bisect when Newton leaves the bracket or fails to halve the last step.
        if (!(next > lo && next < hi) || std::abs(2.0 * f) > std::abs(prev_step * slope)) {
            next = 0.5 * (lo + hi);
        }
        prev_step = next - z;
        const double scale = std::max(1.0, std::abs(next));
        if (std::abs(prev_step) <= 4e-16 * scale || hi - lo <= 4e-16 * scale) return next;
        z = next;
    }
    return z;
}

double htqf_quantile(double tau, const HtqfParams& params, const LatentLaw& law) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::domain_error("htqf_quantile: tau must lie in (0,1), got " + std::to_string(tau));
    }
    params.validate();
    return params.mu +
           params.sigma * g_transform(law.quantile(tau), params.u, params.v, params.A);
}

Matrix sample_latent_matrix(const LatentLaw& law, std::size_t rows, std::size_t cols,
                            std::uint64_t seed) {
    Matrix z(rows, cols);
    parallel_chunks(rows, kSampleChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Engine engine(derive_seed(seed, chunk));
        std::vector<double> row(cols);
        for (std::size_t r = begin; r < end; ++r) {
            law.fill(engine, row);
            for (std::size_t c = 0; c < cols; ++c) z(r, c) = row[c];
        }
    });
    return z;
}

std::vector<double> htqf_sample(std::size_t n, const HtqfParams& params, const LatentLaw& law,
                                std::uint64_t seed) {
    params.validate();
    if (n == 0) return {};
    const Matrix z = sample_latent_matrix(law, n, 1, seed);
    std::vector<double> y(n, params.mu);
    simd::g_accumulate(z.col(0), params.sigma, params.u, params.v, params.A, y);
    return y;
}

}  // namespace taildep
