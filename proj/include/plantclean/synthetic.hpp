#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "plantclean/series.hpp"

namespace plantclean {

/// Mean level `level` from sample `start` until the next step.
struct LevelStep {
    std::size_t start = 0;
    double level = 0.0;
};

/// Samples [start, end) of the listed signals are forced to `value`.
struct FaultWindow {
    std::size_t start = 0;
    std::size_t end = 0;
    std::vector<std::string> signal_ids;
    double value = 0.0;
};

enum class LatentShape {
    gaussian,  // iid N(0, 1) per sample
    uniform,   // iid sqrt(3) U(-1, 1): unit variance, bounded
    smooth,    // sqrt(2) sin(2 pi t / period + phase), seeded period and phase
};

/// Recipe for a correlated multi-sensor dataset with known anomalies.
///
/// values = level(t) + loadings x latent(t) + noise_sigma * N(0,1); spikes
/// replace the noise-free value with value +/- spike_amplitude * noise_sigma,
/// fault windows overwrite everything.
struct SyntheticSpec {
    std::size_t n_samples = 0;
    /// Defaults to S01, S02, ... when empty.
    std::vector<std::string> signal_ids;
    std::size_t n_latent = 0;
    double loadings_scale = 1.0;
    LatentShape latent_shape = LatentShape::gaussian;
    /// One plan per signal, or empty for level 0 everywhere.
    std::vector<std::vector<LevelStep>> segment_plan;
    /// One entry per signal; its length defines the signal count.
    std::vector<double> noise_sigma;
    double spike_rate = 0.0;
    double spike_amplitude = 6.0;
    std::vector<FaultWindow> fault_windows;
    /// When set, spikes are never placed inside any fault window.
    bool spikes_avoid_faults = true;
    std::uint64_t seed = 0;
};

struct SpikeTruth {
    std::size_t signal = 0;
    std::size_t index = 0;
    double value = 0.0;
};

struct GroundTruth {
    /// Per signal: indices where the mean level changes.
    std::vector<std::vector<std::size_t>> change_points;
    /// Level that starts at the matching change point.
    std::vector<std::vector<double>> change_levels;
    /// Ordered by (signal, index).
    std::vector<SpikeTruth> spikes;
    std::vector<FaultWindow> faults;
    /// Row-major M x n_latent loading matrix actually used.
    std::vector<double> loadings;

    bool empty() const noexcept;
};

struct SyntheticData {
    Dataset dataset;
    GroundTruth truth;
};

/// Pure function of `spec`: every signal, the latent factors and the loadings
/// draw from their own seeded streams.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// `count` level steps starting at 0: consecutive starts (and both ends of
/// the series) at least `min_gap` apart, each jump of random sign with size
/// uniform in [min_jump, max_jump]. Throws `Error(validation)` when the steps
/// cannot fit.
std::vector<LevelStep> random_level_plan(std::size_t n_samples, std::size_t count, double min_jump,
                                         double max_jump, std::size_t min_gap, std::uint64_t seed);

/// Sidecar ground-truth CSV: `kind,signal_id,start,end,value`.
void write_ground_truth(const GroundTruth& truth, const Dataset& dataset, std::ostream& out);

}  // namespace plantclean
