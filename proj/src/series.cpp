#include "plantclean/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_set>

#include "plantclean/error.hpp"
#include "plantclean/segment_stats.hpp"

namespace plantclean {

std::string_view to_string(SignalKind kind) noexcept {
    switch (kind) {
        case SignalKind::temperature: return "temperature";
        case SignalKind::pressure: return "pressure";
        case SignalKind::flow_rate: return "flow_rate";
        case SignalKind::unknown: return "unknown";
    }
    return "unknown";
}

std::string_view default_unit(SignalKind kind) noexcept {
    switch (kind) {
        case SignalKind::temperature: return "\xC2\xB0" "C";
        case SignalKind::pressure: return "kPa";
        case SignalKind::flow_rate: return "t/h";
        case SignalKind::unknown: return "";
    }
    return "";
}

SignalKind infer_kind(std::string_view id) noexcept {
    if (id.empty()) return SignalKind::unknown;
    switch (id.front()) {
        case 'T': case 't': return SignalKind::temperature;
        case 'P': case 'p': return SignalKind::pressure;
        case 'F': case 'f': return SignalKind::flow_rate;
        default: return SignalKind::unknown;
    }
}

std::string Timestamp::to_string() const {
    if (!wall_time) return std::to_string(index);
    using namespace std::chrono;
    const auto day = floor<days>(*wall_time);
    const year_month_day ymd{day};
    const hh_mm_ss hms{*wall_time - day};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()),
                  static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return buf;
}

std::size_t Signal::count_present() const noexcept {
    return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), 0));
}

Signal Signal::from_values(std::string id, std::vector<double> values) {
    Signal s;
    s.kind = infer_kind(id);
    s.unit = std::string(default_unit(s.kind));
    s.id = std::move(id);
    s.missing.assign(values.size(), 0);
    s.values = std::move(values);
    return s;
}

Dataset::Dataset(std::vector<Timestamp> timestamps, std::vector<Signal> signals)
    : timestamps_(std::move(timestamps)), signals_(std::move(signals)) {
    const std::size_t n = timestamps_.size();
    if (signals_.empty()) throw Error(ErrorCode::validation, "dataset has no signals");
    if (n < 2) throw Error(ErrorCode::validation, "dataset needs at least 2 samples");
    for (std::size_t i = 0; i < n; ++i) {
        if (timestamps_[i].index != i) {
            throw Error(ErrorCode::validation,
                        "timestamp indices must be contiguous from 0 (row " +
                            std::to_string(i) + ")");
        }
    }
    std::unordered_set<std::string> ids;
    for (const auto& s : signals_) {
        if (s.values.size() != n || s.missing.size() != n) {
            throw Error(ErrorCode::validation,
                        "signal '" + s.id + "' length differs from the timestamp count");
        }
        if (!ids.insert(s.id).second) {
            throw Error(ErrorCode::validation, "duplicate signal id '" + s.id + "'");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!s.missing[i] && !std::isfinite(s.values[i])) {
                throw Error(ErrorCode::validation, "signal '" + s.id +
                                                       "' has a non-finite value at index " +
                                                       std::to_string(i));
            }
        }
    }
}

Dataset Dataset::from_signals(std::vector<Signal> signals) {
    const std::size_t n = signals.empty() ? 0 : signals.front().size();
    std::vector<Timestamp> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i].index = i;
    return Dataset(std::move(ts), std::move(signals));
}

std::optional<std::size_t> Dataset::find(std::string_view id) const noexcept {
    for (std::size_t j = 0; j < signals_.size(); ++j) {
        if (signals_[j].id == id) return j;
    }
    return std::nullopt;
}

bool Dataset::has_missing() const noexcept {
    return std::any_of(signals_.begin(), signals_.end(), [](const Signal& s) {
        return std::find(s.missing.begin(), s.missing.end(), 1) != s.missing.end();
    });
}

Dataset Dataset::with_signals(std::vector<Signal> signals) const {
    return Dataset(timestamps_, std::move(signals));
}

double stn_ratio(const Signal& signal) {
    const auto stats = SegmentStats::batch(signal.values, signal.missing);
    if (stats.count() == 0) {
        throw Error(ErrorCode::empty_input, "signal '" + signal.id + "' has no values");
    }
    if (stats.count() < 2) {
        throw Error(ErrorCode::too_short,
                    "signal '" + signal.id + "' needs at least 2 values for a ratio");
    }
    const double sd = stats.stddev();
    if (sd == 0.0) {
        return stats.mean() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return stats.mean() / sd;
}

}  // namespace plantclean
