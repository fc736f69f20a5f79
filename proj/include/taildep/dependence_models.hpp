#pragma once

// Multivariate tail dependence models built by transforming i.i.d. latents.
//
// Lower-triangular model, for i = 1..n:
//   y_i = mu_i + sum_{j <= i} sigma_ij * g(z_j | u_ij, v_ij)
//
// One-factor model with market variable y_M:
//   y_M = alpha_M + beta_M * g(z_M | u_M, v_M)
//   y_i = alpha_i + beta_i * g(z_M | u_i^M, v_i^M) + gamma_i * g(z_i | u_i, v_i)
//
// sigma_ij mainly drives the correlation of (y_i, y_j) while v_ij (u_ij)
// drives their lower (upper) tail dependence.

#include "taildep/common.hpp"
#include "taildep/htqf.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace taildep {

struct TriangularModel {
    std::vector<double> mu;  // n locations
    Matrix sigma;            // n x n lower triangular, diagonal > 0
    Matrix u;                // n x n lower triangular, entries in [1, 64]
    Matrix v;                // n x n lower triangular, entries in [1, 64]
    double A = kDefaultA;
    LatentLaw law;
    bool reduced = false;  // u_ij = u_jj and v_ij = v_jj below the diagonal

    /// n-dimensional model with mu = 0, identity sigma and u = v = 1.
    static TriangularModel independent(std::size_t n);

    [[nodiscard]] std::size_t dim() const noexcept { return mu.size(); }
    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const;
    [[nodiscard]] std::size_t parameter_count() const noexcept;
    [[nodiscard]] HtqfParams diagonal(std::size_t i) const;

    static constexpr std::size_t full_parameter_count(std::size_t n) noexcept {
        return n + 3 * (n * n + n) / 2;
    }
    static constexpr std::size_t reduced_parameter_count(std::size_t n) noexcept {
        return 3 * n + (n * n + n) / 2;
    }
};

struct MarketParams {
    double alpha = 0.0;
    double beta = 1.0;
    double u = 1.0;
    double v = 1.0;
};

struct AssetParams {
    double alpha = 0.0;
    double beta = 0.0;      // loading on the market latent
    double u_market = 1.0;  // right-tail sensitivity to the market latent
    double v_market = 1.0;  // left-tail sensitivity to the market latent
    double gamma = 1.0;     // idiosyncratic scale
    double u = 1.0;
    double v = 1.0;
};

struct OneFactorModel {
    MarketParams market;
    std::vector<AssetParams> assets;
    double A = kDefaultA;
    LatentLaw law;

    [[nodiscard]] std::size_t asset_count() const noexcept { return assets.size(); }
    void validate() const;
};

/// Applies the triangular transform to latent rows z (n_obs x n).
[[nodiscard]] Matrix apply_triangular(const TriangularModel& model, const Matrix& z);
/// Applies the one-factor transform to latent rows (z_M, z_1, ..., z_n).
[[nodiscard]] Matrix apply_onefactor(const OneFactorModel& model, const Matrix& z);

[[nodiscard]] Matrix triangular_sample(const TriangularModel& model, std::size_t n_obs,
                                       std::uint64_t seed);
/// Column 0 is the market variable, columns 1..n the assets.
[[nodiscard]] Matrix onefactor_sample(const OneFactorModel& model, std::size_t n_obs,
                                      std::uint64_t seed);

/// (n+1)-dimensional triangular embedding with the market first. Slots the
/// one-factor model does not use carry sigma = 0 and u = v = 1.
[[nodiscard]] TriangularModel to_triangular(const OneFactorModel& model);

/// Draws n_obs rows of a joint distribution from a seed.
using JointSampler = std::function<Matrix(std::size_t n_obs, std::uint64_t seed)>;

[[nodiscard]] JointSampler make_sampler(TriangularModel model);
[[nodiscard]] JointSampler make_sampler(OneFactorModel model);

}  // namespace taildep
