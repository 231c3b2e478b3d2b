#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace plantclean {

/// Per-sample flags; 1 = set. Stored as bytes so it can be viewed as a span.
using Mask = std::vector<std::uint8_t>;
using MaskView = std::span<const std::uint8_t>;

enum class SignalKind { temperature, pressure, flow_rate, unknown };

std::string_view to_string(SignalKind kind) noexcept;
std::string_view default_unit(SignalKind kind) noexcept;

/// Guess the sensor kind from a plant tag: T* temperature, P* pressure,
/// F* flow rate.
SignalKind infer_kind(std::string_view id) noexcept;

struct Timestamp {
    std::size_t index = 0;
    std::optional<std::chrono::sys_seconds> wall_time;

    /// ISO-8601 (`YYYY-MM-DDTHH:MM:SSZ`) when a wall time is present,
    /// otherwise the plain index.
    std::string to_string() const;
};

struct Signal {
    std::string id;
    SignalKind kind = SignalKind::unknown;
    std::string unit;
    /// Missing positions hold NaN; the mask is authoritative.
    std::vector<double> values;
    Mask missing;

    std::size_t size() const noexcept { return values.size(); }
    std::size_t count_present() const noexcept;
    bool is_missing(std::size_t i) const noexcept { return missing[i] != 0; }

    /// Build a signal with no missing values.
    static Signal from_values(std::string id, std::vector<double> values);
};

/// Time-aligned N x M block of sensor readings. Immutable after construction.
class Dataset {
public:
    /// Throws `Error(validation)` unless every signal has length N, ids are
    /// unique, M >= 1, N >= 2 and timestamp indices are 0..N-1.
    Dataset(std::vector<Timestamp> timestamps, std::vector<Signal> signals);

    /// Dataset with plain integer timestamps 0..N-1.
    static Dataset from_signals(std::vector<Signal> signals);

    std::size_t n_samples() const noexcept { return timestamps_.size(); }
    std::size_t n_signals() const noexcept { return signals_.size(); }
    const std::vector<Timestamp>& timestamps() const noexcept { return timestamps_; }
    const std::vector<Signal>& signals() const noexcept { return signals_; }
    const Signal& signal(std::size_t j) const { return signals_.at(j); }
    /// Index of the signal with this id, if present.
    std::optional<std::size_t> find(std::string_view id) const noexcept;

    bool has_missing() const noexcept;

    /// Same timestamps, new signal payload (validated the same way).
    Dataset with_signals(std::vector<Signal> signals) const;

private:
    std::vector<Timestamp> timestamps_;
    std::vector<Signal> signals_;
};

/// Signal-to-noise ratio: mean / sample standard deviation of the present
/// values. Returns +infinity when the deviation is zero and the mean is not,
/// and 0 when both are zero.
double stn_ratio(const Signal& signal);

}  // namespace plantclean
