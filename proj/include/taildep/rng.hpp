#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace taildep {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` of `seed`. Distinct streams never share state,
/// so work split into chunks reproduces regardless of how chunks are scheduled.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Rows per independently seeded sampling chunk.
inline constexpr std::size_t kSampleChunk = 8192;

/// Number of worker threads used by parallel loops. Results never depend on it.
std::size_t worker_count() noexcept;
void set_worker_count(std::size_t n) noexcept;

/// Calls fn(chunk_index, begin, end) for every chunk of [0, n). Chunks are
/// distributed over worker threads; fn must only touch its own range.
template <class Fn>
void parallel_chunks(std::size_t n, std::size_t chunk, Fn&& fn) {
    if (n == 0) return;
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    const std::size_t workers = std::min(worker_count(), n_chunks);
    auto run = [&](std::size_t w) {
        for (std::size_t c = w; c < n_chunks; c += workers) {
            fn(c, c * chunk, std::min(n, (c + 1) * chunk));
        }
    };
    if (workers <= 1) {
        run(0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run, w);
    run(0);
    for (auto& t : pool) t.join();
}

}  // namespace taildep
