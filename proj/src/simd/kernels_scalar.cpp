#include "backends.hpp"

namespace taildep::simd::scalar {
namespace {

void g_accumulate(const double* z, std::size_t n, double scale, double log_u, double log_v,
                  double inv_a, double* out) {
    for (std::size_t k = 0; k < n; ++k) {
        out[k] += scale * detail::g_scalar(z[k], log_u, log_v, inv_a);
    }
}

ExpMoments exp_moments(const double* z, std::size_t n, double a) {
    ExpMoments m;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = z[k];
        double w = std::exp(detail::clamp_exponent(a * x));
        for (double& s : m.s) {
            s += w;
            w *= x;
        }
    }
    return m;
}

CrossMoments cross_moments(const double* y, const double* z, std::size_t n) {
    CrossMoments m;
    for (std::size_t k = 0; k < n; ++k) {
        double p = y[k];
        for (std::size_t l = 0; l < m.yz.size(); ++l) {
            m.yz[l] += p;
            m.yz_sq[l] += p * p;
            p *= z[k];
        }
    }
    return m;
}

std::size_t count_below(const double* x, const double* y, std::size_t n, double qx, double qy) {
    std::size_t c = 0;
    for (std::size_t k = 0; k < n; ++k) c += (x[k] < qx && y[k] < qy) ? 1 : 0;
    return c;
}

std::size_t count_above(const double* x, const double* y, std::size_t n, double qx, double qy) {
    std::size_t c = 0;
    for (std::size_t k = 0; k < n; ++k) c += (x[k] > qx && y[k] > qy) ? 1 : 0;
    return c;
}

}  // namespace

const Backend kBackend{Isa::Scalar, "scalar", g_accumulate, exp_moments,
                       cross_moments, count_below, count_above};

}  // namespace taildep::simd::scalar
