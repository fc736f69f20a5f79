#pragma once

// Return panels: CSV ingestion, train/test split and synthetic generation.

#include "taildep/common.hpp"
#include "taildep/dependence_models.hpp"
#include "taildep/garch.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace taildep {

enum class InputMode { Prices, Returns };

[[nodiscard]] std::optional<InputMode> parse_input_mode(std::string_view text) noexcept;
[[nodiscard]] std::string_view to_string(InputMode mode) noexcept;

struct ReturnPanel {
    std::vector<std::string> dates;  // ISO yyyy-mm-dd, strictly increasing
    std::vector<std::string> names;
    Matrix returns;                  // T x n, percent log returns
    std::size_t split_index = 0;     // first test row

    [[nodiscard]] std::size_t rows() const noexcept { return returns.rows(); }
    [[nodiscard]] std::size_t cols() const noexcept { return returns.cols(); }
    [[nodiscard]] Matrix train() const { return returns.row_slice(0, split_index); }
    [[nodiscard]] Matrix test() const { return returns.row_slice(split_index, rows()); }
    void validate() const;
};

struct IngestOptions {
    std::size_t min_rows = 500;
    double split = 0.75;
};

/// Header row: a date column followed by one column per series. Empty, NA
/// and NaN fields mark a missing value; such rows are dropped across the
/// whole panel with one warning giving the count. Prices become
/// r_t = 100 ln(P_t / P_{t-1}) between consecutive retained rows.
[[nodiscard]] ReturnPanel ingest_csv(std::istream& in, InputMode mode, const IngestOptions& options = {});
[[nodiscard]] ReturnPanel ingest_csv_file(const std::string& path, InputMode mode,
                                          const IngestOptions& options = {});

/// ceil(split * T); throws unless both sides are non-empty.
[[nodiscard]] std::size_t split_point(std::size_t T, double split);

/// Validates yyyy-mm-dd against the calendar.
[[nodiscard]] bool is_iso_date(std::string_view text) noexcept;
/// Consecutive calendar days starting at 2000-01-01.
[[nodiscard]] std::vector<std::string> synthetic_dates(std::size_t count);

void write_panel_csv(std::ostream& out, const ReturnPanel& panel);

/// T rows of GARCH returns driven by a joint innovation sample. Each
/// innovation column is centred and scaled to unit variance over the T rows
/// before it drives its series.
[[nodiscard]] ReturnPanel synthesize_panel(const JointSampler& innovations, std::span<const GarchParams> garch,
                                           std::size_t T, std::uint64_t seed, double split = 0.75);

}  // namespace taildep
