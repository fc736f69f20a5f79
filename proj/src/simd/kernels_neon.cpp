// AArch64 NEON variants. Two doubles per register; same algorithms as AVX2.

#include "backends.hpp"

#include <arm_neon.h>

namespace taildep::simd::neon {
namespace {

inline float64x2_t exp_pd(float64x2_t x) {
    const float64x2_t log2e = vdupq_n_f64(1.4426950408889634073599);
    const float64x2_t c1 = vdupq_n_f64(6.93145751953125e-1);
    const float64x2_t c2 = vdupq_n_f64(1.42860682030941723212e-6);

    const float64x2_t fx = vrndnq_f64(vmulq_f64(x, log2e));
    x = vfmsq_f64(x, fx, c1);
    x = vfmsq_f64(x, fx, c2);

    const float64x2_t xx = vmulq_f64(x, x);
    float64x2_t p = vdupq_n_f64(1.26177193074810590878e-4);
    p = vfmaq_f64(vdupq_n_f64(3.02994407707441961300e-2), p, xx);
    p = vfmaq_f64(vdupq_n_f64(9.99999999999999999910e-1), p, xx);
    const float64x2_t px = vmulq_f64(p, x);

    float64x2_t q = vdupq_n_f64(3.00198505138664455042e-6);
    q = vfmaq_f64(vdupq_n_f64(2.52448340349684104192e-3), q, xx);
    q = vfmaq_f64(vdupq_n_f64(2.27265548208155028766e-1), q, xx);
    q = vfmaq_f64(vdupq_n_f64(2.00000000000000000009e0), q, xx);

    const float64x2_t e =
        vfmaq_f64(vdupq_n_f64(1.0), vdupq_n_f64(2.0), vdivq_f64(px, vsubq_f64(q, px)));

    const int64x2_t n = vaddq_s64(vcvtq_s64_f64(fx), vdupq_n_s64(1023));
    const float64x2_t pow2 = vreinterpretq_f64_s64(vshlq_n_s64(n, 52));
    return vmulq_f64(e, pow2);
}

inline float64x2_t clamp_pd(float64x2_t x) {
    return vmaxq_f64(vdupq_n_f64(-kExponentClamp), vminq_f64(vdupq_n_f64(kExponentClamp), x));
}

void g_accumulate(const double* z, std::size_t n, double scale, double log_u, double log_v,
                  double inv_a, double* out) {
    const float64x2_t vlu = vdupq_n_f64(log_u);
    const float64x2_t vlv = vdupq_n_f64(-log_v);
    const float64x2_t vinv = vdupq_n_f64(inv_a);
    const float64x2_t vscale = vdupq_n_f64(scale);
    const float64x2_t one = vdupq_n_f64(1.0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const float64x2_t x = vld1q_f64(z + k);
        const float64x2_t up = exp_pd(clamp_pd(vmulq_f64(x, vlu)));
        const float64x2_t down = exp_pd(clamp_pd(vmulq_f64(x, vlv)));
        const float64x2_t factor = vfmaq_f64(one, vaddq_f64(up, down), vinv);
        const float64x2_t g = vmulq_f64(x, factor);
        vst1q_f64(out + k, vfmaq_f64(vld1q_f64(out + k), vscale, g));
    }
    for (; k < n; ++k) out[k] += scale * detail::g_scalar(z[k], log_u, log_v, inv_a);
}

ExpMoments exp_moments(const double* z, std::size_t n, double a) {
    const float64x2_t va = vdupq_n_f64(a);
    float64x2_t acc[7];
    for (auto& v : acc) v = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const float64x2_t x = vld1q_f64(z + k);
        float64x2_t w = exp_pd(clamp_pd(vmulq_f64(va, x)));
        for (int p = 0; p < 7; ++p) {
            acc[p] = vaddq_f64(acc[p], w);
            w = vmulq_f64(w, x);
        }
    }
    ExpMoments m;
    for (int p = 0; p < 7; ++p) m.s[p] = vaddvq_f64(acc[p]);
    for (; k < n; ++k) {
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
    float64x2_t acc[6];
    float64x2_t acc_sq[6];
    for (int l = 0; l < 6; ++l) acc[l] = acc_sq[l] = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const float64x2_t x = vld1q_f64(z + k);
        float64x2_t p = vld1q_f64(y + k);
        for (int l = 0; l < 6; ++l) {
            acc[l] = vaddq_f64(acc[l], p);
            acc_sq[l] = vfmaq_f64(acc_sq[l], p, p);
            p = vmulq_f64(p, x);
        }
    }
    CrossMoments m;
    for (int l = 0; l < 6; ++l) {
        m.yz[l] = vaddvq_f64(acc[l]);
        m.yz_sq[l] = vaddvq_f64(acc_sq[l]);
    }
    for (; k < n; ++k) {
        double p = y[k];
        for (std::size_t l = 0; l < 6; ++l) {
            m.yz[l] += p;
            m.yz_sq[l] += p * p;
            p *= z[k];
        }
    }
    return m;
}

std::size_t count_below(const double* x, const double* y, std::size_t n, double qx, double qy) {
    const float64x2_t vqx = vdupq_n_f64(qx);
    const float64x2_t vqy = vdupq_n_f64(qy);
    uint64x2_t acc = vdupq_n_u64(0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const uint64x2_t m = vandq_u64(vcltq_f64(vld1q_f64(x + k), vqx),
                                       vcltq_f64(vld1q_f64(y + k), vqy));
        acc = vaddq_u64(acc, vshrq_n_u64(m, 63));
    }
    std::size_t c = vaddvq_u64(acc);
    for (; k < n; ++k) c += (x[k] < qx && y[k] < qy) ? 1 : 0;
    return c;
}

std::size_t count_above(const double* x, const double* y, std::size_t n, double qx, double qy) {
    const float64x2_t vqx = vdupq_n_f64(qx);
    const float64x2_t vqy = vdupq_n_f64(qy);
    uint64x2_t acc = vdupq_n_u64(0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const uint64x2_t m = vandq_u64(vcgtq_f64(vld1q_f64(x + k), vqx),
                                       vcgtq_f64(vld1q_f64(y + k), vqy));
        acc = vaddq_u64(acc, vshrq_n_u64(m, 63));
    }
    std::size_t c = vaddvq_u64(acc);
    for (; k < n; ++k) c += (x[k] > qx && y[k] > qy) ? 1 : 0;
    return c;
}

}  // namespace

const Backend kBackend{Isa::Neon, "neon", g_accumulate, exp_moments,
                       cross_moments, count_below, count_above};

}  // namespace taildep::simd::neon
