#pragma once

// Heavy-tailed quantile function (HTQF).
//
//   g(z | u, v) = z * (u^z / A + v^(-z) / A + 1)
//   Q(tau)      = mu + sigma * g(Z_tau | u, v)
//
// u >= 1 thickens the right tail, v >= 1 the left one; u = v = 1 is a plain
// rescaling by (1 + 2/A). A >= 3 keeps g strictly increasing with
// g'(z) >= 1 - 2 e^-2 / A.

#include "taildep/common.hpp"
#include "taildep/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace taildep {

inline constexpr double kDefaultA = 4.0;
inline constexpr double kMinA = 3.0;
inline constexpr double kTailParamMax = 64.0;

/// Distribution of the untransformed latent variables.
class LatentLaw {
public:
    enum class Kind { StandardNormal, StudentT };

    LatentLaw() = default;
    static LatentLaw standard_normal() noexcept { return {}; }
    /// Plain (not variance-standardized) Student t; requires df > 2.
    static LatentLaw student_t(double df);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] double df() const noexcept { return df_; }

    [[nodiscard]] double quantile(double tau) const;
    [[nodiscard]] double cdf(double x) const;
    /// Fills `out` with independent draws from `engine`.
    void fill(Engine& engine, std::span<double> out) const;

    bool operator==(const LatentLaw&) const = default;

private:
    Kind kind_ = Kind::StandardNormal;
    double df_ = 0.0;
};

struct HtqfParams {
    double mu = 0.0;
    double sigma = 1.0;
    double u = 1.0;
    double v = 1.0;
    double A = kDefaultA;

    /// Throws std::invalid_argument unless sigma > 0, u, v in [1, 64], A >= 3.
    void validate() const;
};

void validate_tail_params(double u, double v, double A);

[[nodiscard]] double g_transform(double z, double u, double v, double A = kDefaultA);
[[nodiscard]] double g_derivative(double z, double u, double v, double A = kDefaultA);
/// Unique z with g(z | u, v) = y. Safeguarded Newton on the bracket between 0
/// and y (|g(z)| >= |z| for every admissible parameter set).
[[nodiscard]] double g_inverse(double y, double u, double v, double A = kDefaultA);

/// mu + sigma * g(Z_tau); throws std::domain_error unless 0 < tau < 1.
[[nodiscard]] double htqf_quantile(double tau, const HtqfParams& params,
                                   const LatentLaw& law = LatentLaw::standard_normal());

/// n i.i.d. draws of mu + sigma * g(z), z from `law`. n = 0 gives an empty vector.
[[nodiscard]] std::vector<double> htqf_sample(std::size_t n, const HtqfParams& params,
                                              const LatentLaw& law, std::uint64_t seed);

/// rows x cols latent draws. Each chunk of kSampleChunk rows uses its own
/// derived seed and is drawn row by row, so a row's values do not depend on
/// the column layout of the caller or on thread scheduling.
[[nodiscard]] Matrix sample_latent_matrix(const LatentLaw& law, std::size_t rows, std::size_t cols,
                                          std::uint64_t seed);

}  // namespace taildep
