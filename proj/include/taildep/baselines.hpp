#pragma once

// Competing dependence models: multivariate normal and t, bivariate Clayton
// and Gumbel copulas with empirical marginals, and one-factor models with
// Gaussian or Student t factors.

#include "taildep/common.hpp"
#include "taildep/dependence_models.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace taildep {

enum class BaselineKind { MvNormal, MvT, Clayton, Gumbel, OneFactorGaussian, OneFactorT };

[[nodiscard]] std::string_view to_string(BaselineKind kind) noexcept;
/// Accepts the CLI spellings mvnormal, mvt, clayton, gumbel, of-gaussian, of-t.
[[nodiscard]] std::optional<BaselineKind> parse_baseline_kind(std::string_view text) noexcept;

struct MvNormalModel {
    std::vector<double> mean;
    Matrix cov;
};

/// Location, scatter and df; the covariance is df / (df - 2) * scatter.
struct MvTModel {
    std::vector<double> mean;
    Matrix scatter;
    double df = 5.0;
};

struct CopulaModel {
    enum class Family { Clayton, Gumbel };
    Family family = Family::Clayton;
    double theta = 1.0;
    // Sorted training values of each margin; sampling maps a uniform u to
    // the ceil(u K)-th order statistic.
    std::array<std::vector<double>, 2> margins;
};

/// y_M = alpha_M + beta_M z_M,  y_i = alpha_i + beta_i z_M + gamma_i z_i with
/// unit-variance z. Student t factors use per-variable df; Gaussian ones leave
/// the df vectors empty.
struct OneFactorBaselineModel {
    bool student = false;
    double market_alpha = 0.0;
    double market_beta = 1.0;
    double market_df = 0.0;
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> gamma;
    std::vector<double> df;
};

class BaselineModel {
public:
    using Params = std::variant<MvNormalModel, MvTModel, CopulaModel, OneFactorBaselineModel>;

    BaselineModel() = default;
    explicit BaselineModel(Params params) : params_(std::move(params)) {}

    [[nodiscard]] BaselineKind kind() const noexcept;
    [[nodiscard]] std::size_t dim() const noexcept;
    [[nodiscard]] const Params& params() const noexcept { return params_; }
    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;

private:
    Params params_;
};

struct BaselineOptions {
    std::size_t min_samples = 500;
    double theta_max = 50.0;
    // df grid for the multivariate t profile likelihood: 2.5, 3, ..., 30.
    double df_min = 2.5;
    double df_max = 30.0;
    double df_step = 0.5;
};

/// Knight's O(K log K) Kendall tau-b.
[[nodiscard]] double kendall_tau(std::span<const double> x, std::span<const double> y);

/// EM estimate of (mean, scatter) for a fixed df and its log-likelihood.
struct MvTEstimate {
    std::vector<double> mean;
    Matrix scatter;
    double loglik = 0.0;
};
[[nodiscard]] MvTEstimate fit_mvt_fixed_df(const Matrix& data, double df,
                                           const MvTEstimate* warm_start = nullptr);

/// For the one-factor kinds column 0 is the market variable.
[[nodiscard]] BaselineModel fit_baseline(BaselineKind kind, const Matrix& data,
                                         const BaselineOptions& options = {});

[[nodiscard]] Matrix sample_baseline(const BaselineModel& model, std::size_t n_obs,
                                     std::uint64_t seed);

[[nodiscard]] JointSampler make_sampler(BaselineModel model);

}  // namespace taildep
