#pragma once

// Replicate-parallel Monte-Carlo reduction with results independent of the
// worker count.
//
// Replicates are grouped into fixed-size blocks. Each block is summed serially
// (Neumaier compensation) by whichever worker claims it, and block partials
// are combined in block order on the calling thread. Scheduling only changes
// which thread computes a block, never the arithmetic.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace arpred {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    void add(const CompensatedSum& other) noexcept {
        add(other.sum_);
        add(other.comp_);
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// First two moments of one replicate quantity.
struct Moments {
    CompensatedSum sum;
    CompensatedSum sum_sq;
    std::uint64_t count = 0;

    void add(double x) noexcept {
        sum.add(x);
        sum_sq.add(x * x);
        ++count;
    }
    void merge(const Moments& other) noexcept {
        sum.add(other.sum);
        sum_sq.add(other.sum_sq);
        count += other.count;
    }
    [[nodiscard]] double mean() const noexcept {
        return count ? sum.value() / static_cast<double>(count) : 0.0;
    }
    /// Sample variance (denominator count - 1).
    [[nodiscard]] double variance() const noexcept {
        if (count < 2) return 0.0;
        const double m = mean();
        const double ss = sum_sq.value() - static_cast<double>(count) * m * m;
        return std::max(0.0, ss / static_cast<double>(count - 1));
    }
    /// Monte-Carlo standard error of the mean.
    [[nodiscard]] double std_error() const noexcept {
        return count ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
    }
};

inline constexpr std::size_t kReplicateBlock = 4096;

[[nodiscard]] inline unsigned default_worker_count() noexcept {
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `fn(m)` for m in [0, count) and accumulates the K returned values.
///
/// `fn` must be a pure function of m (it owns its RNG stream). Exceptions
/// thrown by any replicate are rethrown on the calling thread.
template <std::size_t K, class Fn>
[[nodiscard]] std::array<Moments, K> run_replicates(std::uint64_t count, unsigned workers, Fn&& fn) {
    const std::uint64_t n_blocks = (count + kReplicateBlock - 1) / kReplicateBlock;
    std::vector<std::array<Moments, K>> partial(n_blocks);
    std::atomic<std::uint64_t> next_block{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::atomic<bool> failed{false};

    auto worker = [&] {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const std::uint64_t b = next_block.fetch_add(1);
            if (b >= n_blocks) return;
            const std::uint64_t lo = b * kReplicateBlock;
            const std::uint64_t hi = std::min<std::uint64_t>(count, lo + kReplicateBlock);
            try {
                auto& acc = partial[b];
                for (std::uint64_t m = lo; m < hi; ++m) {
                    const std::array<double, K> v = fn(m);
                    for (std::size_t j = 0; j < K; ++j) acc[j].add(v[j]);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    workers = std::max(1u, workers);
    const auto n_threads = static_cast<unsigned>(std::min<std::uint64_t>(workers, n_blocks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::array<Moments, K> total{};
    for (const auto& block : partial) {
        for (std::size_t j = 0; j < K; ++j) total[j].merge(block[j]);
    }
    return total;
}

}  // namespace arpred
