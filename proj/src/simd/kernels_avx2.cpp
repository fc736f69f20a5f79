// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include "backends.hpp"

#include <immintrin.h>

namespace taildep::simd::avx2 {
namespace {

// Cephes-style exp: x = n ln2 + r with a two-part ln2, rational approximation
// of exp(r) on [-ln2/2, ln2/2], then scaling by 2^n through the exponent bits.
// Inputs are pre-clamped to +-kExponentClamp so 2^n stays a normal number.
inline __m256d exp_pd(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);

    const __m256d fx =
        _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    x = _mm256_fnmadd_pd(fx, c1, x);
    x = _mm256_fnmadd_pd(fx, c2, x);

    const __m256d xx = _mm256_mul_pd(x, x);
    __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
    p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(3.02994407707441961300e-2));
    p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(9.99999999999999999910e-1));
    const __m256d px = _mm256_mul_pd(p, x);

    __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
    q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.52448340349684104192e-3));
    q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.27265548208155028766e-1));
    q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.00000000000000000009e0));

    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d e =
        _mm256_fmadd_pd(two, _mm256_div_pd(px, _mm256_sub_pd(q, px)), _mm256_set1_pd(1.0));

    const __m128i n32 = _mm256_cvtpd_epi32(fx);
    const __m256i n64 = _mm256_add_epi64(_mm256_cvtepi32_epi64(n32), _mm256_set1_epi64x(1023));
    const __m256d pow2 = _mm256_castsi256_pd(_mm256_slli_epi64(n64, 52));
    return _mm256_mul_pd(e, pow2);
}

inline __m256d clamp_pd(__m256d x) {
    const __m256d hi = _mm256_set1_pd(kExponentClamp);
    const __m256d lo = _mm256_set1_pd(-kExponentClamp);
    return _mm256_max_pd(lo, _mm256_min_pd(hi, x));
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void g_accumulate(const double* z, std::size_t n, double scale, double log_u, double log_v,
                  double inv_a, double* out) {
    const __m256d vlu = _mm256_set1_pd(log_u);
    const __m256d vlv = _mm256_set1_pd(-log_v);
    const __m256d vinv = _mm256_set1_pd(inv_a);
    const __m256d vscale = _mm256_set1_pd(scale);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d x = _mm256_loadu_pd(z + k);
        const __m256d up = exp_pd(clamp_pd(_mm256_mul_pd(x, vlu)));
        const __m256d down = exp_pd(clamp_pd(_mm256_mul_pd(x, vlv)));
        const __m256d factor = _mm256_fmadd_pd(_mm256_add_pd(up, down), vinv, one);
        const __m256d g = _mm256_mul_pd(x, factor);
        _mm256_storeu_pd(out + k, _mm256_fmadd_pd(vscale, g, _mm256_loadu_pd(out + k)));
    }
    for (; k < n; ++k) out[k] += scale * detail::g_scalar(z[k], log_u, log_v, inv_a);
}

ExpMoments exp_moments(const double* z, std::size_t n, double a) {
    const __m256d va = _mm256_set1_pd(a);
    __m256d acc[7];
    for (auto& v : acc) v = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d x = _mm256_loadu_pd(z + k);
        __m256d w = exp_pd(clamp_pd(_mm256_mul_pd(va, x)));
        for (int p = 0; p < 7; ++p) {
            acc[p] = _mm256_add_pd(acc[p], w);
            w = _mm256_mul_pd(w, x);
        }
    }
    ExpMoments m;
    for (int p = 0; p < 7; ++p) m.s[p] = hsum(acc[p]);
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
    __m256d acc[6];
    __m256d acc_sq[6];
    for (int l = 0; l < 6; ++l) acc[l] = acc_sq[l] = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d x = _mm256_loadu_pd(z + k);
        __m256d p = _mm256_loadu_pd(y + k);
        for (int l = 0; l < 6; ++l) {
            acc[l] = _mm256_add_pd(acc[l], p);
            acc_sq[l] = _mm256_fmadd_pd(p, p, acc_sq[l]);
            p = _mm256_mul_pd(p, x);
        }
    }
    CrossMoments m;
    for (int l = 0; l < 6; ++l) {
        m.yz[l] = hsum(acc[l]);
        m.yz_sq[l] = hsum(acc_sq[l]);
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

template <int Cmp>
std::size_t count_joint(const double* x, const double* y, std::size_t n, double qx, double qy) {
    const __m256d vqx = _mm256_set1_pd(qx);
    const __m256d vqy = _mm256_set1_pd(qy);
    std::size_t c = 0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d mx = _mm256_cmp_pd(_mm256_loadu_pd(x + k), vqx, Cmp);
        const __m256d my = _mm256_cmp_pd(_mm256_loadu_pd(y + k), vqy, Cmp);
        c += static_cast<std::size_t>(
            __builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(_mm256_and_pd(mx, my)))));
    }
    for (; k < n; ++k) {
        if constexpr (Cmp == _CMP_LT_OQ) {
            c += (x[k] < qx && y[k] < qy) ? 1 : 0;
        } else {
            c += (x[k] > qx && y[k] > qy) ? 1 : 0;
        }
    }
    return c;
}

std::size_t count_below(const double* x, const double* y, std::size_t n, double qx, double qy) {
    return count_joint<_CMP_LT_OQ>(x, y, n, qx, qy);
}

std::size_t count_above(const double* x, const double* y, std::size_t n, double qx, double qy) {
    return count_joint<_CMP_GT_OQ>(x, y, n, qx, qy);
}

}  // namespace

const Backend kBackend{Isa::Avx2, "avx2", g_accumulate, exp_moments,
                       cross_moments, count_below, count_above};

}  // namespace taildep::simd::avx2
