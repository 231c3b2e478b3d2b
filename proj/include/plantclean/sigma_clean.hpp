#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "plantclean/segment_stats.hpp"
#include "plantclean/series.hpp"

namespace plantclean {

enum class Spread {
    std_dev,     // mean +/- 3 sample std
    scaled_mad,  // median +/- 3 * 1.4826 * MAD
};

std::string_view to_string(Spread spread) noexcept;
/// Accepts "std" and "mad"; throws `Error(config)` otherwise.
Spread parse_spread(std::string_view text);

/// Half-open index range [start, end) with statistics of its present values.
struct Piece {
    std::size_t start = 0;
    std::size_t end = 0;
    SegmentStats stats;

    std::size_t length() const noexcept { return end - start; }
};

/// Per-point outlier flags; missing points are never flagged.
struct OutlierMask {
    Mask flags;

    std::size_t size() const noexcept { return flags.size(); }
    std::size_t count() const noexcept;
    bool operator[](std::size_t i) const noexcept { return flags[i] != 0; }

    friend bool operator==(const OutlierMask&, const OutlierMask&) = default;
};

struct Bounds {
    double lower = 0.0;
    double upper = 0.0;
};

struct GlobalSigmaResult {
    OutlierMask mask;
    Bounds bounds;
};

struct CleanReport {
    /// Mean absolute residual against the piece-wise mean.
    double mad = 0.0;
    double residual_std = 0.0;
    std::size_t n_changepoints = 0;
    std::size_t n_outliers = 0;
    double outlier_fraction = 0.0;
};

/// Whole-series 3 sigma bounds; points strictly outside are flagged.
/// Throws `Error(empty_input)` when nothing is present and `Error(too_short)`
/// with a single present value.
GlobalSigmaResult global_3sigma(const Signal& signal, Spread spread = Spread::std_dev);

/// Pieces [0, cp1), [cp1, cp2), ..., [cp_k, n). `missing` may be empty.
/// Throws `Error(domain)` for change points that are not strictly increasing
/// inside (0, n).
std::vector<Piece> pieces_from_changepoints(std::span<const std::size_t> change_points,
                                            std::size_t n, std::span<const double> values,
                                            MaskView missing = {});

/// Convenience overload using the signal's values and mask.
std::vector<Piece> pieces_from_changepoints(std::span<const std::size_t> change_points,
                                            const Signal& signal);

/// center -/+ 3 spread of the piece's present values; (center, center) when
/// fewer than two are present or they are all equal.
Bounds piece_bounds(const Signal& signal, const Piece& piece, Spread spread = Spread::std_dev);

/// 3 sigma test inside every piece. Pieces with fewer than two present values
/// never flag. Throws `Error(validation)` unless `pieces` partition the signal.
OutlierMask piecewise_3sigma(const Signal& signal, std::span<const Piece> pieces,
                             Spread spread = Spread::std_dev);

/// Flagged points take their piece's mean; everything else is copied.
Signal impute_piecewise_mean(const Signal& signal, std::span<const Piece> pieces,
                             const OutlierMask& mask);

CleanReport clean_diagnostics(const Signal& signal, std::span<const Piece> pieces,
                              const OutlierMask& mask);

}  // namespace plantclean
