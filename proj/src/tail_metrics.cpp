#include "taildep/tail_metrics.hpp"
#include "taildep/format.hpp"
#include "taildep/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace taildep {

std::string_view to_string(TailSide side) noexcept { return side == TailSide::Down ? "down" : "up"; }

std::size_t quantile_rank(double tau, std::size_t K) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::domain_error("quantile level must lie in (0,1), got " + std::to_string(tau));
    }
    if (K == 0) throw std::invalid_argument("empirical quantile of empty data");
    const double x = tau * static_cast<double>(K);
    const double r = std::ceil(x - 1e-9 * std::max(1.0, x));
    return std::clamp<std::size_t>(static_cast<std::size_t>(r), 1, K);
}

double empirical_quantile_sorted(std::span<const double> sorted, double tau) {
    return sorted[quantile_rank(tau, sorted.size()) - 1];
}

double upper_tail_threshold_sorted(std::span<const double> sorted, double tau) {
    return sorted[sorted.size() - quantile_rank(tau, sorted.size())];
}

double empirical_quantile(std::span<const double> data, double tau) {
    if (data.empty()) throw std::invalid_argument("empirical quantile of empty data");
    const std::size_t r = quantile_rank(tau, data.size());
    std::vector<double> copy(data.begin(), data.end());
    auto nth = copy.begin() + static_cast<std::ptrdiff_t>(r - 1);
    std::nth_element(copy.begin(), nth, copy.end());
    return *nth;
}

namespace {

std::vector<double> sorted_copy(std::span<const double> x) {
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return s;
}

void reliability_check(std::size_t K, double tau) {
    if (static_cast<double>(K) * tau < 100.0) {
        warn("proxy tail dependence with K*tau = " + std::to_string(static_cast<double>(K) * tau) +
             " < 100 is unreliable");
    }
}

double proxy_from_sorted(std::span<const double> x, std::span<const double> y,
                         std::span<const double> xs, std::span<const double> ys, double tau,
                         TailSide side) {
    std::size_t hits = 0;
    if (side == TailSide::Down) {
        hits = simd::count_joint_below(x, y, empirical_quantile_sorted(xs, tau),
                                       empirical_quantile_sorted(ys, tau));
    } else {
        hits = simd::count_joint_above(x, y, upper_tail_threshold_sorted(xs, tau),
                                       upper_tail_threshold_sorted(ys, tau));
    }
    const double lambda = static_cast<double>(hits) / (static_cast<double>(x.size()) * tau);
    return std::clamp(lambda, 0.0, 1.0);
}

void check_taus(std::span<const double> taus, std::size_t n, TailSide side) {
    if (taus.empty()) throw std::invalid_argument("tail curve needs at least one tau");
    for (std::size_t k = 0; k < taus.size(); ++k) {
        if (!(taus[k] > 0.0 && taus[k] < 0.5)) {
            throw std::invalid_argument("tail curve taus must lie in (0, 0.5) for side " +
                                        std::string(to_string(side)));
        }
        if (k > 0 && !(taus[k] > taus[k - 1])) {
            throw std::invalid_argument("tail curve taus must be strictly increasing");
        }
    }
    if (static_cast<double>(n) * taus.front() < 100.0) {
        throw std::invalid_argument("tail curve needs n_samples * min(tau) >= 100");
    }
}

}  // namespace

double proxy_tail_dep(std::span<const double> x, std::span<const double> y, double tau,
                      TailSide side) {
    if (x.size() != y.size()) throw std::invalid_argument("proxy_tail_dep: size mismatch");
    if (x.empty()) throw std::invalid_argument("proxy_tail_dep: empty data");
    reliability_check(x.size(), tau);
    const auto xs = sorted_copy(x);
    const auto ys = sorted_copy(y);
    return proxy_from_sorted(x, y, xs, ys, tau, side);
}

double pearson_corr(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson_corr: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("pearson_corr: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = x[k] - mx, dy = y[k] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw std::invalid_argument("pearson_corr: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

TailCurve tail_curve_from_sample(const Matrix& sample, std::size_t i, std::size_t j,
                                 std::span<const double> taus, TailSide side) {
    if (i >= sample.cols() || j >= sample.cols() || i == j) {
        throw std::invalid_argument("tail curve pair out of range");
    }
    check_taus(taus, sample.rows(), side);
    const auto xs = sorted_copy(sample.col(i));
    const auto ys = sorted_copy(sample.col(j));
    TailCurve curve{{taus.begin(), taus.end()}, {}, side, i, j, sample.rows()};
    curve.lambdas.reserve(taus.size());
    for (double tau : taus) {
        curve.lambdas.push_back(proxy_from_sorted(sample.col(i), sample.col(j), xs, ys, tau, side));
    }
    return curve;
}

std::vector<TailCurve> tail_curves_from_sample(const Matrix& sample, std::span<const double> taus,
                                               TailSide side) {
    check_taus(taus, sample.rows(), side);
    std::vector<std::vector<double>> sorted;
    for (std::size_t c = 0; c < sample.cols(); ++c) sorted.push_back(sorted_copy(sample.col(c)));
    std::vector<TailCurve> curves;
    for (std::size_t i = 0; i < sample.cols(); ++i) {
        for (std::size_t j = i + 1; j < sample.cols(); ++j) {
            TailCurve curve{{taus.begin(), taus.end()}, {}, side, i, j, sample.rows()};
            for (double tau : taus) {
                curve.lambdas.push_back(proxy_from_sorted(sample.col(i), sample.col(j), sorted[i],
                                                          sorted[j], tau, side));
            }
            curves.push_back(std::move(curve));
        }
    }
    return curves;
}

TailCurve tail_curve(const JointSampler& sampler, std::size_t i, std::size_t j,
                     std::span<const double> taus, TailSide side, std::size_t n_samples,
                     std::uint64_t seed) {
    check_taus(taus, n_samples, side);
    return tail_curve_from_sample(sampler(n_samples, seed), i, j, taus, side);
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0 && hi > lo) || count < 2) {
        throw std::invalid_argument("log_spaced needs 0 < lo < hi and count >= 2");
    }
    std::vector<double> out(count);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t k = 0; k < count; ++k) {
        out[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

void write_tail_curves_csv(std::ostream& out, std::span<const TailCurve> curves) {
    out << "tau,lambda,side,i,j,n_samples\n";
    for (const auto& c : curves) {
        for (std::size_t k = 0; k < c.taus.size(); ++k) {
            out << format_double(c.taus[k]) << ',' << format_double(c.lambdas[k]) << ','
                << to_string(c.side) << ',' << c.i << ',' << c.j << ',' << c.n_samples << '\n';
        }
    }
}

}  // namespace taildep
