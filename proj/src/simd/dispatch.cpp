#include "backends.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace taildep::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(TAILDEP_HAVE_AVX2)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Backend* detect() noexcept {
    if (const char* env = std::getenv("TAILDEP_ISA")) {
        const std::string want(env);
        if (want == "scalar") return &scalar::kBackend;
#if defined(TAILDEP_HAVE_AVX2)
        if (want == "avx2" && cpu_has_avx2()) return &avx2::kBackend;
#endif
#if defined(TAILDEP_HAVE_NEON)
        if (want == "neon") return &neon::kBackend;
#endif
    }
#if defined(TAILDEP_HAVE_NEON)
    return &neon::kBackend;
#else
    if (cpu_has_avx2()) {
#if defined(TAILDEP_HAVE_AVX2)
        return &avx2::kBackend;
#endif
    }
    return &scalar::kBackend;
#endif
}

std::atomic<const Backend*>& active() noexcept {
    static std::atomic<const Backend*> current{detect()};
    return current;
}

}  // namespace

bool isa_available(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar:
            return true;
        case Isa::Avx2:
            return cpu_has_avx2();
        case Isa::Neon:
#if defined(TAILDEP_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const Backend& backend_for(Isa isa) {
    if (!isa_available(isa)) {
        throw std::invalid_argument("SIMD variant not available on this machine: " +
                                    std::string(isa_name(isa)));
    }
    switch (isa) {
#if defined(TAILDEP_HAVE_AVX2)
        case Isa::Avx2:
            return avx2::kBackend;
#endif
#if defined(TAILDEP_HAVE_NEON)
        case Isa::Neon:
            return neon::kBackend;
#endif
        default:
            return scalar::kBackend;
    }
}

const Backend& backend() noexcept { return *active().load(std::memory_order_acquire); }

void select_isa(Isa isa) { active().store(&backend_for(isa), std::memory_order_release); }

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar:
            return "scalar";
        case Isa::Avx2:
            return "avx2";
        case Isa::Neon:
            return "neon";
    }
    return "unknown";
}

void g_accumulate(std::span<const double> z, double scale, double u, double v, double A,
                  std::span<double> out) {
    if (out.size() != z.size()) throw std::invalid_argument("g_accumulate: size mismatch");
    backend().g_accumulate(z.data(), z.size(), scale, std::log(u), std::log(v), 1.0 / A,
                           out.data());
}

void g_transform(std::span<const double> z, double u, double v, double A, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    g_accumulate(z, 1.0, u, v, A, out);
}

ExpMoments exp_moments(std::span<const double> z, double a) {
    return backend().exp_moments(z.data(), z.size(), a);
}

CrossMoments cross_moments(std::span<const double> y, std::span<const double> z) {
    if (y.size() != z.size()) throw std::invalid_argument("cross_moments: size mismatch");
    return backend().cross_moments(y.data(), z.data(), y.size());
}

std::size_t count_joint_below(std::span<const double> x, std::span<const double> y, double qx,
                              double qy) {
    if (x.size() != y.size()) throw std::invalid_argument("count_joint_below: size mismatch");
    return backend().count_below(x.data(), y.data(), x.size(), qx, qy);
}

std::size_t count_joint_above(std::span<const double> x, std::span<const double> y, double qx,
                              double qy) {
    if (x.size() != y.size()) throw std::invalid_argument("count_joint_above: size mismatch");
    return backend().count_above(x.data(), y.data(), x.size(), qx, qy);
}

}  // namespace taildep::simd
