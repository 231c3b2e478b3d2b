#include "plantclean/sigma_clean.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plantclean/error.hpp"

namespace plantclean {

namespace {

constexpr double kMadScale = 1.4826;

double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    const double hi = *mid;
    if (n % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), mid);
    return lo + (hi - lo) / 2.0;
}

struct CenterSpread {
    double center = 0.0;
    double spread = 0.0;
    std::size_t present = 0;
};

CenterSpread center_spread(const Signal& s, std::size_t start, std::size_t end, Spread spread) {
    std::vector<double> present;
    present.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) {
        if (!s.is_missing(i)) present.push_back(s.values[i]);
    }
    CenterSpread out;
    out.present = present.size();
    if (present.empty()) return out;
    const auto [lo, hi] = std::minmax_element(present.begin(), present.end());
    if (*lo == *hi) {
        out.center = *lo;
        return out;
    }
    if (present.size() < 2) {
        out.center = present.front();
        return out;
    }
    if (spread == Spread::std_dev) {
        const auto st = SegmentStats::batch(present);
        out.center = st.mean();
        out.spread = st.stddev();
    } else {
        out.center = median_inplace(present);
        for (auto& v : present) v = std::abs(v - out.center);
        out.spread = kMadScale * median_inplace(present);
    }
    return out;
}

Bounds flag_range(const Signal& s, std::size_t start, std::size_t end, Spread spread,
                  Mask& flags) {
    const auto cs = center_spread(s, start, end, spread);
    const Bounds b{cs.center - 3.0 * cs.spread, cs.center + 3.0 * cs.spread};
    if (cs.spread > 0.0) {
        for (std::size_t i = start; i < end; ++i) {
            if (s.is_missing(i)) continue;
            const double v = s.values[i];
            flags[i] = (v < b.lower || v > b.upper) ? 1 : 0;
        }
    }
    return b;
}

void check_partition(std::span<const Piece> pieces, std::size_t n) {
    if (pieces.empty()) throw Error(ErrorCode::validation, "no pieces given");
    std::size_t expect = 0;
    for (const auto& p : pieces) {
        if (p.start != expect || p.end <= p.start) {
            throw Error(ErrorCode::validation, "pieces do not partition the signal at index " +
                                                   std::to_string(expect));
        }
        expect = p.end;
    }
    if (expect != n) {
        throw Error(ErrorCode::validation, "pieces end at " + std::to_string(expect) +
                                               ", signal has " + std::to_string(n) + " samples");
    }
}

void check_mask(const Signal& s, const OutlierMask& mask) {
    if (mask.size() != s.size()) {
        throw Error(ErrorCode::validation, "mask length " + std::to_string(mask.size()) +
                                               " differs from signal length " +
                                               std::to_string(s.size()));
    }
}

}  // namespace

std::string_view to_string(Spread spread) noexcept {
    return spread == Spread::std_dev ? "std" : "mad";
}

Spread parse_spread(std::string_view text) {
    if (text == "std") return Spread::std_dev;
    if (text == "mad") return Spread::scaled_mad;
    throw Error(ErrorCode::config, "unknown spread '" + std::string(text) + "' (use std or mad)");
}

std::size_t OutlierMask::count() const noexcept {
    return static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(),
                                                  [](std::uint8_t f) { return f != 0; }));
}

GlobalSigmaResult global_3sigma(const Signal& signal, Spread spread) {
    const std::size_t present = signal.count_present();
    if (present == 0) throw Error(ErrorCode::empty_input, "signal '" + signal.id + "' has no values");
    if (present < 2) {
        throw Error(ErrorCode::too_short, "signal '" + signal.id + "' has a single value");
    }
    GlobalSigmaResult out;
    out.mask.flags.assign(signal.size(), 0);
    out.bounds = flag_range(signal, 0, signal.size(), spread, out.mask.flags);
    return out;
}

std::vector<Piece> pieces_from_changepoints(std::span<const std::size_t> change_points,
                                            std::size_t n, std::span<const double> values,
                                            MaskView missing) {
    if (values.size() != n || (!missing.empty() && missing.size() != n)) {
        throw Error(ErrorCode::validation, "values/mask length differs from n");
    }
    std::vector<Piece> pieces;
    pieces.reserve(change_points.size() + 1);
    std::size_t start = 0;
    auto close = [&](std::size_t end) {
        const auto len = end - start;
        const auto m = missing.empty() ? MaskView{} : missing.subspan(start, len);
        pieces.push_back(Piece{start, end, SegmentStats::batch(values.subspan(start, len), m)});
        start = end;
    };
    for (const std::size_t cp : change_points) {
        if (cp <= start || cp >= n) {
            throw Error(ErrorCode::domain, "change point " + std::to_string(cp) +
                                               " is not increasing inside (0, " +
                                               std::to_string(n) + ")");
        }
        close(cp);
    }
    close(n);
    return pieces;
}

std::vector<Piece> pieces_from_changepoints(std::span<const std::size_t> change_points,
                                            const Signal& signal) {
    return pieces_from_changepoints(change_points, signal.size(), signal.values, signal.missing);
}

Bounds piece_bounds(const Signal& signal, const Piece& piece, Spread spread) {
    if (piece.end > signal.size() || piece.end <= piece.start) {
        throw Error(ErrorCode::validation, "piece outside the signal");
    }
    const auto cs = center_spread(signal, piece.start, piece.end, spread);
    return Bounds{cs.center - 3.0 * cs.spread, cs.center + 3.0 * cs.spread};
}

OutlierMask piecewise_3sigma(const Signal& signal, std::span<const Piece> pieces, Spread spread) {
    check_partition(pieces, signal.size());
    OutlierMask mask;
    mask.flags.assign(signal.size(), 0);
    for (const auto& p : pieces) flag_range(signal, p.start, p.end, spread, mask.flags);
    return mask;
}

Signal impute_piecewise_mean(const Signal& signal, std::span<const Piece> pieces,
                             const OutlierMask& mask) {
    check_partition(pieces, signal.size());
    check_mask(signal, mask);
    Signal out = signal;
    for (const auto& p : pieces) {
        for (std::size_t i = p.start; i < p.end; ++i) {
            if (mask[i] && !signal.is_missing(i)) out.values[i] = p.stats.mean();
        }
    }
    return out;
}

CleanReport clean_diagnostics(const Signal& signal, std::span<const Piece> pieces,
                              const OutlierMask& mask) {
    check_partition(pieces, signal.size());
    check_mask(signal, mask);
    CleanReport r;
    SegmentStats residual;
    double abs_sum = 0.0;
    for (const auto& p : pieces) {
        for (std::size_t i = p.start; i < p.end; ++i) {
            if (signal.is_missing(i)) continue;
            const double e = signal.values[i] - p.stats.mean();
            residual.add(e);
            abs_sum += std::abs(e);
        }
    }
    const std::size_t present = residual.count();
    r.mad = present > 0 ? abs_sum / static_cast<double>(present) : 0.0;
    r.residual_std = residual.stddev();
    r.n_changepoints = pieces.size() - 1;
    for (std::size_t i = 0; i < signal.size(); ++i) {
        if (mask[i] && !signal.is_missing(i)) ++r.n_outliers;
    }
    r.outlier_fraction =
        present > 0 ? static_cast<double>(r.n_outliers) / static_cast<double>(present) : 0.0;
    return r;
}

}  // namespace plantclean
