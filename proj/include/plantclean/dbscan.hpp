#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace plantclean {

struct Point2D {
    double x = 0.0;
    double y = 0.0;
};

/// Points of the outlier map with the sample each one came from.
class PointSet2D {
public:
    PointSet2D() = default;
    /// Throws `Error(validation)` on non-finite coordinates, duplicate source
    /// indices or a length mismatch. Empty `source_index` means 0..n-1.
    explicit PointSet2D(std::vector<Point2D> points, std::vector<std::size_t> source_index = {});

    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    const std::vector<Point2D>& points() const noexcept { return points_; }
    const std::vector<std::size_t>& source_index() const noexcept { return source_index_; }
    const Point2D& operator[](std::size_t i) const noexcept { return points_[i]; }

private:
    std::vector<Point2D> points_;
    std::vector<std::size_t> source_index_;
};

struct DbscanParams {
    double epsilon = 0.7;
    std::size_t min_pts = 6;

    /// Throws `Error(config)` unless epsilon > 0 and min_pts >= 1.
    void validate() const;
};

struct ClusterLabels {
    /// 0 = noise, otherwise 1..n_clusters.
    std::vector<int> labels;
    int n_clusters = 0;
    /// Points with at least min_pts neighbours (self included) within epsilon.
    std::vector<std::uint8_t> core;

    std::size_t n_noise() const noexcept;
};

/// DBSCAN with closed Euclidean balls; a point counts as its own neighbour.
///
/// Clusters are numbered by their lowest-index core point. A border point
/// reachable from several clusters joins the lowest-numbered one. Neighbour
/// queries use a uniform grid; coordinates too large for the grid fall back
/// to an all-pairs scan.
ClusterLabels dbscan(const PointSet2D& points, const DbscanParams& params);

struct EpsilonEstimate {
    double epsilon = 0.0;
    std::size_t knee_index = 0;
    /// Sorted ascending distance of each point to its k-th nearest other point.
    std::vector<double> k_distance;
    /// Set when the knee distance is 0 (duplicated points).
    bool degenerate = false;
};

/// k-distance knee: the curve point farthest from the chord between the
/// curve's endpoints, smallest index on ties. Throws `Error(domain)` unless
/// size() > k >= 1.
EpsilonEstimate estimate_epsilon(const PointSet2D& points, std::size_t k);

/// max(4, round(log10(n))). Throws `Error(domain)` for n == 0.
std::size_t min_pts_heuristic(std::size_t n_samples);

}  // namespace plantclean
