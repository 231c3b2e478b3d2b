#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "plantclean/changepoint.hpp"
#include "plantclean/csv.hpp"
#include "plantclean/pca.hpp"
#include "plantclean/series.hpp"
#include "plantclean/sigma_clean.hpp"

namespace plantclean {

struct PipelineConfig {
    std::filesystem::path input;
    std::filesystem::path output_dir = "out";
    ChangePointConfig changepoint;
    Spread spread = Spread::std_dev;
    /// Components used for T^2 and the outlier map.
    std::size_t n_components = 2;
    double alpha = 0.05;
    /// Fixed DBSCAN radius; empty means k-distance estimation.
    std::optional<double> epsilon = 0.7;
    /// Fixed DBSCAN min_pts; empty means max(4, round(log10 N)).
    std::optional<std::size_t> min_pts;
    /// Seeds the subsample used for k-distance estimation on large maps.
    std::uint64_t seed = 0;
    /// Worker threads for the per-signal stages; 0 = hardware concurrency.
    unsigned threads = 0;
    bool figures = true;

    /// Throws `Error(config)` on any out-of-range parameter.
    void validate() const;
};

struct SignalReport {
    std::string id;
    SignalKind kind = SignalKind::unknown;
    std::string unit;
    std::vector<ChangePoint> change_points;
    CleanReport clean;
    double stn = 0.0;
    Bounds global_bounds;
    std::size_t global_outliers = 0;
};

struct ClusterSummary {
    int id = 0;
    std::size_t n_points = 0;
    /// Runs of consecutive sample indices belonging to the cluster.
    std::vector<OutlierPeriod> ranges;
};

struct RunReport {
    std::string input;
    std::size_t n_samples = 0;
    std::size_t n_signals = 0;
    LoadReport load;
    ChangePointConfig changepoint;
    Spread spread = Spread::std_dev;
    std::vector<SignalReport> signals;
    std::vector<std::string> excluded_columns;
    std::size_t n_filled_missing = 0;

    std::vector<double> eigenvalues;
    std::vector<double> explained_ratio;
    std::size_t n_components = 0;
    double alpha = 0.0;
    double t2_threshold = 0.0;
    std::size_t n_t2_flags = 0;
    std::vector<OutlierPeriod> periods;

    double epsilon = 0.0;
    bool epsilon_estimated = false;
    std::size_t min_pts = 0;
    bool min_pts_heuristic = false;
    int n_clusters = 0;
    std::size_t n_noise = 0;
    std::vector<ClusterSummary> clusters;

    std::vector<std::string> warnings;
};

/// Everything computed by a run, kept in memory for callers that need more
/// than the report (tests, acceptance harness).
struct PipelineResult {
    RunReport report;
    Dataset cleaned;
    std::vector<OutlierMask> masks;
    PcaFit pca;
    T2Series t2;
    std::vector<int> labels;
};

/// Runs every stage on an in-memory dataset and, when `config.output_dir` is
/// not empty, writes the exports there. Outputs are staged in a hidden
/// directory and moved into place only after every file is complete.
PipelineResult run_pipeline(const Dataset& dataset, const PipelineConfig& config,
                            const LoadReport& load = {}, const std::string& source = "memory");

/// Loads `config.input` and runs the pipeline.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace plantclean
