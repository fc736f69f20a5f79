#pragma once

#include "taildep/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace taildep::simd {

namespace scalar {
extern const Backend kBackend;
}
#if defined(TAILDEP_HAVE_AVX2)
namespace avx2 {
extern const Backend kBackend;
}
#endif
#if defined(TAILDEP_HAVE_NEON)
namespace neon {
extern const Backend kBackend;
}
#endif

namespace detail {

inline double clamp_exponent(double x) noexcept {
    return std::clamp(x, -kExponentClamp, kExponentClamp);
}

/// Reference tail transform used for remainders and by the scalar backend.
inline double g_scalar(double z, double log_u, double log_v, double inv_a) noexcept {
    const double up = std::exp(clamp_exponent(z * log_u));
    const double down = std::exp(clamp_exponent(-z * log_v));
    return z * (up * inv_a + down * inv_a + 1.0);
}

}  // namespace detail
}  // namespace taildep::simd
