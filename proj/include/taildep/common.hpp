#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace taildep {

/// Dense column-major matrix of doubles. Columns are contiguous, which is the
/// access pattern of every per-series computation in the library.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[c * rows_ + r]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[c * rows_ + r]; }

    [[nodiscard]] std::span<double> col(std::size_t c) noexcept {
        return {data_.data() + c * rows_, rows_};
    }
    [[nodiscard]] std::span<const double> col(std::size_t c) const noexcept {
        return {data_.data() + c * rows_, rows_};
    }

    /// Copy of rows [begin, end).
    [[nodiscard]] Matrix row_slice(std::size_t begin, std::size_t end) const;
    /// Copy of the listed columns, in the listed order.
    [[nodiscard]] Matrix select_cols(std::span<const std::size_t> which) const;

    [[nodiscard]] const std::vector<double>& raw() const noexcept { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Raised when an iterative solver exhausts its budget. Carries the best point
/// found so the caller can still inspect or use it.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> best, double objective)
        : std::runtime_error(what), best_(std::move(best)), objective_(objective) {}

    [[nodiscard]] const std::vector<double>& best() const noexcept { return best_; }
    [[nodiscard]] double objective() const noexcept { return objective_; }

private:
    std::vector<double> best_;
    double objective_;
};

// Warnings are routed through a replaceable sink; the default writes to stderr.
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace taildep
