#include "taildep/common.hpp"
#include "taildep/rng.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace taildep {

Matrix Matrix::row_slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows_) throw std::out_of_range("Matrix::row_slice: bad range");
    Matrix out(end - begin, cols_);
    for (std::size_t c = 0; c < cols_; ++c) {
        auto src = col(c);
        std::copy(src.begin() + static_cast<std::ptrdiff_t>(begin),
                  src.begin() + static_cast<std::ptrdiff_t>(end), out.col(c).begin());
    }
    return out;
}

Matrix Matrix::select_cols(std::span<const std::size_t> which) const {
    Matrix out(rows_, which.size());
    for (std::size_t k = 0; k < which.size(); ++k) {
        if (which[k] >= cols_) throw std::out_of_range("Matrix::select_cols: bad column");
        auto src = col(which[k]);
        std::copy(src.begin(), src.end(), out.col(k).begin());
    }
    return out;
}

namespace {

std::mutex g_sink_mutex;
WarningSink g_sink;

std::atomic<std::size_t> g_workers{0};

}  // namespace

void set_warning_sink(WarningSink sink) {
    std::lock_guard lock(g_sink_mutex);
    g_sink = std::move(sink);
}

void warn(std::string_view message) {
    std::lock_guard lock(g_sink_mutex);
    if (g_sink) {
        g_sink(message);
    } else {
        std::cerr << "warning: " << message << '\n';
    }
}

std::size_t worker_count() noexcept {
    std::size_t n = g_workers.load(std::memory_order_relaxed);
    if (n == 0) {
        n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }
    return n;
}

void set_worker_count(std::size_t n) noexcept { g_workers.store(n, std::memory_order_relaxed); }

}  // namespace taildep
