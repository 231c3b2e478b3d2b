#include "plantclean/changepoint.hpp"

#include <algorithm>
#include <string>

#include "plantclean/error.hpp"

namespace plantclean {

namespace {

double split_statistic(double n_left, double n_right, double mean_left, double mean_right,
                       double variance) {
    const double d = mean_left - mean_right;
    return n_left * n_right / (n_left + n_right) * d * d / (2.0 * variance);
}

bool all_equal(std::span<const double> values, MaskView missing) {
    bool seen = false;
    double first = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!missing.empty() && missing[i]) continue;
        if (!seen) {
            first = values[i];
            seen = true;
        } else if (values[i] != first) {
            return false;
        }
    }
    return true;
}

struct Split {
    std::size_t tau = 0;
    double r = 0.0;
};

// Exact R at every tau in [lo, hi] (positions relative to `values`).
// Calls visit(tau, r) in increasing tau order.
template <class Visit>
void scan_splits(std::span<const double> values, MaskView missing, std::size_t lo,
                 std::size_t hi, double variance_floor, Visit&& visit) {
    const auto total = SegmentStats::batch(values, missing);
    const bool flat = total.count() < 2 || all_equal(values, missing);
    const double variance = std::max(total.variance(), variance_floor);
    const double mu = total.mean();

    // centered prefix sums over present values
    double sum_all = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (missing.empty() || !missing[i]) sum_all += values[i] - mu;
    }
    const auto n_all = static_cast<double>(total.count());
    double sum_left = 0.0;
    double n_left = 0.0;
    std::size_t i = 0;
    for (std::size_t tau = lo; tau <= hi; ++tau) {
        for (; i < tau; ++i) {
            if (!missing.empty() && missing[i]) continue;
            sum_left += values[i] - mu;
            n_left += 1.0;
        }
        const double n_right = n_all - n_left;
        double r = 0.0;
        if (!flat && n_left > 0.0 && n_right > 0.0) {
            r = split_statistic(n_left, n_right, sum_left / n_left, (sum_all - sum_left) / n_right,
                                variance);
        }
        visit(tau, r);
    }
}

Split best_split(std::span<const double> values, MaskView missing, std::size_t lo, std::size_t hi,
                 double variance_floor) {
    Split best{lo, -1.0};
    scan_splits(values, missing, lo, hi, variance_floor, [&](std::size_t tau, double r) {
        if (r > best.r) best = Split{tau, r};
    });
    return best;
}

}  // namespace

void ChangePointConfig::validate() const {
    if (block_size == 0) throw Error(ErrorCode::config, "block_size must be positive");
    if (min_piece_len < block_size) {
        throw Error(ErrorCode::config, "min_piece_len (" + std::to_string(min_piece_len) +
                                           ") must be >= block_size (" +
                                           std::to_string(block_size) + ")");
    }
    if (!(variance_floor > 0.0)) throw Error(ErrorCode::config, "variance_floor must be positive");
    if (!(min_score >= 0.0)) throw Error(ErrorCode::config, "min_score must be >= 0");
}

double r_tau(std::span<const double> values, std::size_t tau, double variance_floor) {
    if (tau == 0 || tau >= values.size()) {
        throw Error(ErrorCode::domain, "tau " + std::to_string(tau) + " outside (0, " +
                                           std::to_string(values.size()) + ")");
    }
    if (all_equal(values, {})) return 0.0;
    const auto left = SegmentStats::batch(values.first(tau));
    const auto right = SegmentStats::batch(values.subspan(tau));
    const auto total = SegmentStats::batch(values);
    return split_statistic(static_cast<double>(left.count()), static_cast<double>(right.count()),
                           left.mean(), right.mean(),
                           std::max(total.variance(), variance_floor));
}

SingleChangePoint detect_single_offline(std::span<const double> values, double variance_floor) {
    if (values.size() < 4) {
        throw Error(ErrorCode::too_short, "single change point search needs >= 4 samples, got " +
                                              std::to_string(values.size()));
    }
    SingleChangePoint out;
    out.trace.taus.reserve(values.size() - 1);
    out.trace.values.reserve(values.size() - 1);
    out.tau_star = 1;
    out.g = -1.0;
    scan_splits(values, {}, 1, values.size() - 1, variance_floor, [&](std::size_t tau, double r) {
        out.trace.taus.push_back(tau);
        out.trace.values.push_back(r);
        if (r > out.g) {
            out.g = r;
            out.tau_star = tau;
        }
    });
    return out;
}

OnlineDetector::OnlineDetector(ChangePointConfig config) : config_(config) {
    config_.validate();
}

void OnlineDetector::push(double value, bool missing) {
    buffer_.push_back(missing ? 0.0 : value);
    buffer_missing_.push_back(missing ? 1 : 0);
    ++seen_;
    drain();
}

void OnlineDetector::push(std::span<const double> values, MaskView missing) {
    if (!missing.empty() && missing.size() != values.size()) {
        throw Error(ErrorCode::validation, "mask length differs from value count");
    }
    buffer_.reserve(buffer_.size() + values.size());
    buffer_missing_.reserve(buffer_missing_.size() + values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const bool m = !missing.empty() && missing[i];
        buffer_.push_back(m ? 0.0 : values[i]);
        buffer_missing_.push_back(m ? 1 : 0);
    }
    seen_ += values.size();
    drain();
}

void OnlineDetector::drain() {
    while (processed_ < seen_) feed(processed_++);
}

void OnlineDetector::feed(std::size_t abs_index) {
    const std::size_t rel = abs_index - seg_start_;
    if (!buffer_missing_[rel]) block_.add(buffer_[rel]);
    if (++block_fill_ == config_.block_size) on_block_complete(abs_index + 1);
}

void OnlineDetector::on_block_complete(std::size_t block_end) {
    const SegmentStats block = block_;
    block_ = SegmentStats{};
    block_fill_ = 0;
    if (before_.count() == 0) {
        // reference block (mu0)
        before_ = block;
        return;
    }
    if (block.count() == 0) return;

    SegmentStats total = before_;
    total.merge(block);
    const double variance = std::max(total.variance(), config_.variance_floor);
    const double r = split_statistic(static_cast<double>(before_.count()),
                                     static_cast<double>(block.count()), before_.mean(),
                                     block.mean(), variance);
    before_ = total;
    observe(block_end - config_.block_size, r, block_end);
}

void OnlineDetector::observe(std::size_t tau, double r, std::size_t block_end) {
    if (candidate_ && r > candidate_->score) candidate_ = ChangePoint{tau, r};

    if (!have_prev_) {
        peak_ = ChangePoint{tau, r};
    } else if (r > prev_r_) {
        rising_ = true;
        peak_ = ChangePoint{tau, r};
    } else if (r < prev_r_ && rising_) {
        rising_ = false;
        if (!candidate_ && peak_.score >= config_.min_score &&
            peak_.index >= seg_start_ + config_.min_piece_len) {
            candidate_ = peak_;
        }
    }
    prev_r_ = r;
    have_prev_ = true;

    if (candidate_ && block_end - candidate_->index >= config_.min_piece_len) confirm(block_end);
}

void OnlineDetector::confirm(std::size_t block_end) {
    const std::size_t len = block_end - seg_start_;
    const std::size_t lo = config_.min_piece_len;
    const std::size_t hi = len - config_.min_piece_len;
    const std::span<const double> window(buffer_.data(), len);
    const MaskView window_missing(buffer_missing_.data(), len);
    const Split best = best_split(window, window_missing, lo, hi, config_.variance_floor);
    found_.push_back(ChangePoint{seg_start_ + best.tau, best.r});
    restart(seg_start_ + best.tau);
}

void OnlineDetector::restart(std::size_t new_start) {
    const auto drop = static_cast<std::ptrdiff_t>(new_start - seg_start_);
    buffer_.erase(buffer_.begin(), buffer_.begin() + drop);
    buffer_missing_.erase(buffer_missing_.begin(), buffer_missing_.begin() + drop);
    seg_start_ = new_start;
    processed_ = new_start;
    before_ = SegmentStats{};
    block_ = SegmentStats{};
    block_fill_ = 0;
    have_prev_ = false;
    rising_ = false;
    prev_r_ = 0.0;
    candidate_.reset();
}

std::vector<ChangePoint> detect_online(std::span<const double> values,
                                       const ChangePointConfig& config, MaskView missing) {
    config.validate();
    if (values.size() < 2 * config.block_size) {
        throw Error(ErrorCode::too_short, "online search needs >= 2 * block_size samples, got " +
                                              std::to_string(values.size()));
    }
    OnlineDetector detector(config);
    detector.push(values, missing);
    return detector.change_points();
}

}  // namespace plantclean
