#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "plantclean/segment_stats.hpp"
#include "plantclean/series.hpp"

namespace plantclean {

struct ChangePointConfig {
    /// Samples added per iteration (n).
    std::size_t block_size = 10;
    /// Minimum piece length L_min, in samples.
    std::size_t min_piece_len = 60;
    /// Lower clamp for the segment variance in the statistic.
    double variance_floor = 1e-12;
    /// A local maximum of R must reach this value to become a candidate.
    double min_score = 15.0;

    /// Throws `Error(config)` on block_size == 0, min_piece_len < block_size,
    /// variance_floor <= 0 or a negative min_score.
    void validate() const;
};

/// Log-likelihood-ratio values R at candidate split indices.
struct RTrace {
    std::vector<std::size_t> taus;
    std::vector<double> values;
};

struct ChangePoint {
    std::size_t index = 0;
    double score = 0.0;

    friend bool operator==(const ChangePoint&, const ChangePoint&) = default;
};

struct SingleChangePoint {
    std::size_t tau_star = 0;
    double g = 0.0;
    RTrace trace;
};

/// Gaussian mean-change log-likelihood ratio of splitting `values` at `tau`
/// (left = [0, tau), right = [tau, size)):
///
///     R = (SSE_total - SSE_left - SSE_right) / (2 sigma^2)
///
/// with sigma^2 the sample variance of all of `values`, clamped below by
/// `variance_floor`. Non-negative; zero iff both halves share the mean.
/// Throws `Error(domain)` unless 0 < tau < size.
double r_tau(std::span<const double> values, std::size_t tau, double variance_floor = 1e-12);

/// Exact single change point: argmax of R over tau in 1..N-1, smallest tau on
/// ties. Throws `Error(too_short)` below 4 samples.
SingleChangePoint detect_single_offline(std::span<const double> values,
                                        double variance_floor = 1e-12);

/// Streaming multiple change-point detector.
///
/// Each segment starts at 0 or at the last confirmed change point s. The
/// first block gives the reference mean; every later block is scored with R
/// of "block vs. everything before it in the segment". A strict local
/// maximum of that sequence with R >= min_score and at least L_min samples
/// into the segment becomes the candidate; any later larger R replaces it.
/// Once L_min samples follow the candidate with no larger R, the split is
/// refined to the exact argmax of R over [s, t) within [s + L_min, t - L_min],
/// recorded, and the segment restarts there (buffered samples are replayed).
///
/// Missing samples are skipped in every sum but still advance the index, so
/// L_min and the block size stay time lengths.
class OnlineDetector {
public:
    explicit OnlineDetector(ChangePointConfig config);

    void push(double value, bool missing = false);
    void push(std::span<const double> values, MaskView missing = {});

    const std::vector<ChangePoint>& change_points() const noexcept { return found_; }
    std::size_t samples_seen() const noexcept { return seen_; }
    const ChangePointConfig& config() const noexcept { return config_; }

private:
    void drain();
    void feed(std::size_t abs_index);
    void on_block_complete(std::size_t block_end);
    void observe(std::size_t tau, double r, std::size_t block_end);
    void confirm(std::size_t block_end);
    void restart(std::size_t new_start);

    ChangePointConfig config_;

    // raw samples [seg_start_, seen_)
    std::vector<double> buffer_;
    Mask buffer_missing_;
    std::size_t seg_start_ = 0;
    std::size_t seen_ = 0;
    std::size_t processed_ = 0;

    SegmentStats before_;  // complete blocks of the segment so far
    SegmentStats block_;   // block being filled
    std::size_t block_fill_ = 0;

    bool have_prev_ = false;
    bool rising_ = false;
    double prev_r_ = 0.0;
    ChangePoint peak_;
    std::optional<ChangePoint> candidate_;

    std::vector<ChangePoint> found_;
};

/// Batch front end for `OnlineDetector`. Throws `Error(config)` for an
/// invalid config and `Error(too_short)` below 2 * block_size samples.
std::vector<ChangePoint> detect_online(std::span<const double> values,
                                       const ChangePointConfig& config,
                                       MaskView missing = {});

}  // namespace plantclean
