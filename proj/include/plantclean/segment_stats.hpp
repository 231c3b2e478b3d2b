#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace plantclean {

/// Running mean/variance of a segment (Welford accumulation).
///
/// `variance()` uses the sample divisor (count - 1) and is 0 for a single
/// observation. Incremental updates agree with `batch()` to ~1e-10 relative.
class SegmentStats {
public:
    SegmentStats() = default;

    void add(double x) noexcept {
        ++count_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (x - mean_);
    }

    /// Combine two disjoint segments (Chan et al. pairwise update).
    void merge(const SegmentStats& other) noexcept;

    std::size_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }
    /// Sum of squared deviations from the mean.
    double sse() const noexcept { return m2_ > 0.0 ? m2_ : 0.0; }
    double variance() const noexcept {
        return count_ > 1 ? sse() / static_cast<double>(count_ - 1) : 0.0;
    }
    double stddev() const noexcept;

    /// Two-pass computation over the values whose `missing` flag is false.
    /// An empty `missing` span means nothing is missing.
    static SegmentStats batch(std::span<const double> values,
                              std::span<const std::uint8_t> missing = {});

private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

}  // namespace plantclean
