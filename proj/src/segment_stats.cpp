#include "plantclean/segment_stats.hpp"

#include <cmath>

namespace plantclean {

void SegmentStats::merge(const SegmentStats& other) noexcept {
    if (other.count_ == 0) return;
    if (count_ == 0) {
        *this = other;
        return;
    }
    const double n_a = static_cast<double>(count_);
    const double n_b = static_cast<double>(other.count_);
    const double n = n_a + n_b;
    const double delta = other.mean_ - mean_;
    mean_ += delta * n_b / n;
    m2_ += other.m2_ + delta * delta * n_a * n_b / n;
    count_ += other.count_;
}

double SegmentStats::stddev() const noexcept { return std::sqrt(variance()); }

SegmentStats SegmentStats::batch(std::span<const double> values,
                                 std::span<const std::uint8_t> missing) {
    const bool masked = !missing.empty();
    SegmentStats s;
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (masked && missing[i]) continue;
        sum += values[i];
        ++s.count_;
    }
    if (s.count_ == 0) return s;
    s.mean_ = sum / static_cast<double>(s.count_);
    // second pass with compensation for the rounding of the mean
    double sq = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (masked && missing[i]) continue;
        const double d = values[i] - s.mean_;
        sq += d * d;
        comp += d;
    }
    s.m2_ = sq - comp * comp / static_cast<double>(s.count_);
    if (s.m2_ < 0.0) s.m2_ = 0.0;
    return s;
}

}  // namespace plantclean
