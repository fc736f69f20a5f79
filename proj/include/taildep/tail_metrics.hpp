#pragma once

#include "taildep/common.hpp"
#include "taildep/dependence_models.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace taildep {

enum class TailSide { Down, Up };

[[nodiscard]] std::string_view to_string(TailSide side) noexcept;

/// Rank ceil(tau * K) (1-based), computed so that floating-point noise in
/// tau * K never bumps an exact integer to the next rank.
[[nodiscard]] std::size_t quantile_rank(double tau, std::size_t K);

/// Lower empirical quantile: the ceil(tau K)-th order statistic.
[[nodiscard]] double empirical_quantile(std::span<const double> data, double tau);
[[nodiscard]] double empirical_quantile_sorted(std::span<const double> sorted, double tau);
/// Mirror convention for the upper tail: the ceil(tau K)-th largest value.
[[nodiscard]] double upper_tail_threshold_sorted(std::span<const double> sorted, double tau);

/// Proxy tail dependence at tail probability tau.
///   Down: #{x < q_x(tau), y < q_y(tau)} / (K tau)
///   Up:   #{x > q^x_(tau), y > q^y_(tau)} / (K tau), q^ the upper-tail threshold
/// Clamped to [0, 1]; warns when K tau < 100.
[[nodiscard]] double proxy_tail_dep(std::span<const double> x, std::span<const double> y,
                                    double tau, TailSide side);

[[nodiscard]] double pearson_corr(std::span<const double> x, std::span<const double> y);

struct TailCurve {
    std::vector<double> taus;
    std::vector<double> lambdas;
    TailSide side = TailSide::Down;
    std::size_t i = 0;
    std::size_t j = 1;
    std::size_t n_samples = 0;
};

/// Curves for a fixed pair of columns of an existing sample. Columns are
/// sorted once and reused across all tau.
[[nodiscard]] TailCurve tail_curve_from_sample(const Matrix& sample, std::size_t i, std::size_t j,
                                               std::span<const double> taus, TailSide side);
/// All pairs (i < j) in lexicographic order.
[[nodiscard]] std::vector<TailCurve> tail_curves_from_sample(const Matrix& sample,
                                                             std::span<const double> taus,
                                                             TailSide side);
/// Samples n_samples rows once, then evaluates the proxy at every tau.
[[nodiscard]] TailCurve tail_curve(const JointSampler& sampler, std::size_t i, std::size_t j,
                                   std::span<const double> taus, TailSide side,
                                   std::size_t n_samples, std::uint64_t seed);

/// count points log-spaced on [lo, hi].
[[nodiscard]] std::vector<double> log_spaced(double lo, double hi, std::size_t count);

/// Tidy CSV: tau,lambda,side,i,j,n_samples (with header).
void write_tail_curves_csv(std::ostream& out, std::span<const TailCurve> curves);

}  // namespace taildep
