#pragma once

// Data-parallel inner loops shared by sampling, fitting and tail estimation.
//
// Every kernel has a scalar reference implementation and vectorized variants
// (AVX2+FMA on x86-64, NEON on AArch64). The active variant is chosen once at
// startup from the CPU feature set; TAILDEP_ISA=scalar|avx2|neon in the
// environment, or select_isa(), overrides the choice.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace taildep::simd {

enum class Isa { Scalar, Avx2, Neon };

/// Sums of z^k * exp(a z) for k = 0..6.
struct ExpMoments {
    std::array<double, 7> s{};
};

/// Sums used by the moment equations: sum y z^l, sum (y z^l)^2 for l = 1..5,
/// plus sum y.
struct CrossMoments {
    std::array<double, 6> yz{};     // yz[l] = sum y z^l, l = 0..5
    std::array<double, 6> yz_sq{};  // yz_sq[l] = sum (y z^l)^2
};

/// Exponent bound applied before every exponential in the tail transform.
inline constexpr double kExponentClamp = 700.0;

struct Backend {
    Isa isa;
    std::string_view name;
    // out[k] += scale * g(z[k] | u, v) with log_u = ln u, log_v = ln v, inv_a = 1/A.
    void (*g_accumulate)(const double* z, std::size_t n, double scale, double log_u, double log_v,
                         double inv_a, double* out);
    ExpMoments (*exp_moments)(const double* z, std::size_t n, double a);
    CrossMoments (*cross_moments)(const double* y, const double* z, std::size_t n);
    std::size_t (*count_below)(const double* x, const double* y, std::size_t n, double qx,
                               double qy);
    std::size_t (*count_above)(const double* x, const double* y, std::size_t n, double qx,
                               double qy);
};

[[nodiscard]] bool isa_available(Isa isa) noexcept;
/// Backend for a specific ISA; throws std::invalid_argument if unavailable here.
[[nodiscard]] const Backend& backend_for(Isa isa);
/// Currently active backend.
[[nodiscard]] const Backend& backend() noexcept;
void select_isa(Isa isa);
[[nodiscard]] std::string_view isa_name(Isa isa) noexcept;

// Span wrappers over the active backend.

void g_accumulate(std::span<const double> z, double scale, double u, double v, double A,
                  std::span<double> out);
void g_transform(std::span<const double> z, double u, double v, double A, std::span<double> out);
[[nodiscard]] ExpMoments exp_moments(std::span<const double> z, double a);
[[nodiscard]] CrossMoments cross_moments(std::span<const double> y, std::span<const double> z);
/// #{k : x_k < qx and y_k < qy}
[[nodiscard]] std::size_t count_joint_below(std::span<const double> x, std::span<const double> y,
                                            double qx, double qy);
/// #{k : x_k > qx and y_k > qy}
[[nodiscard]] std::size_t count_joint_above(std::span<const double> x, std::span<const double> y,
                                            double qx, double qy);

}  // namespace taildep::simd
