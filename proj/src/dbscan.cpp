#include "plantclean/dbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>

#include "plantclean/error.hpp"

namespace plantclean {

namespace {

double dist2(const Point2D& a, const Point2D& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

// Cells of side eps / sqrt(2) (shrunk slightly against rounding), so any two
// points sharing a cell are within eps of each other. Neighbours within eps
// lie in the surrounding 5 x 5 block of cells.
struct EpsGrid {
    std::vector<std::size_t> point_cell;
    std::vector<std::size_t> cell_begin;  // CSR offsets into members
    std::vector<std::size_t> members;     // point indices, ascending per cell
    std::vector<std::vector<std::size_t>> neighbours;  // includes the cell itself

    std::size_t n_cells() const noexcept { return cell_begin.size() - 1; }
    std::span<const std::size_t> cell(std::size_t c) const {
        return {members.data() + cell_begin[c], cell_begin[c + 1] - cell_begin[c]};
    }
};

constexpr double kCellLimit = 1e9;

std::optional<EpsGrid> build_eps_grid(const PointSet2D& pts, double eps) {
    const double side = eps / (std::numbers::sqrt2 * (1.0 + 1e-9));
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = min_x;
    double max_x = -min_x;
    double max_y = -min_x;
    for (const auto& p : pts.points()) {
        min_x = std::min(min_x, p.x);
        min_y = std::min(min_y, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    if ((max_x - min_x) / side > kCellLimit || (max_y - min_y) / side > kCellLimit) {
        return std::nullopt;
    }
    auto key_of = [](std::int64_t cx, std::int64_t cy) {
        return (static_cast<std::uint64_t>(cx) << 32) | static_cast<std::uint64_t>(cy);
    };

    EpsGrid g;
    const std::size_t n = pts.size();
    g.point_cell.resize(n);
    std::unordered_map<std::uint64_t, std::size_t> cell_of;
    std::vector<std::pair<std::int64_t, std::int64_t>> coords;
    for (std::size_t i = 0; i < n; ++i) {
        const auto cx = static_cast<std::int64_t>(std::floor((pts[i].x - min_x) / side));
        const auto cy = static_cast<std::int64_t>(std::floor((pts[i].y - min_y) / side));
        const auto [it, inserted] = cell_of.try_emplace(key_of(cx, cy), coords.size());
        if (inserted) coords.emplace_back(cx, cy);
        g.point_cell[i] = it->second;
    }
    const std::size_t n_cells = coords.size();
    g.cell_begin.assign(n_cells + 1, 0);
    for (std::size_t i = 0; i < n; ++i) ++g.cell_begin[g.point_cell[i] + 1];
    std::partial_sum(g.cell_begin.begin(), g.cell_begin.end(), g.cell_begin.begin());
    g.members.resize(n);
    std::vector<std::size_t> fill(g.cell_begin.begin(), g.cell_begin.end() - 1);
    for (std::size_t i = 0; i < n; ++i) g.members[fill[g.point_cell[i]]++] = i;

    g.neighbours.resize(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
        const auto [cx, cy] = coords[c];
        for (std::int64_t dx = -2; dx <= 2; ++dx) {
            for (std::int64_t dy = -2; dy <= 2; ++dy) {
                const auto nx = cx + dx;
                const auto ny = cy + dy;
                if (nx < 0 || ny < 0) continue;
                const auto it = cell_of.find(key_of(nx, ny));
                if (it != cell_of.end()) g.neighbours[c].push_back(it->second);
            }
        }
    }
    return g;
}

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

ClusterLabels dbscan_grid(const PointSet2D& pts, const DbscanParams& params, const EpsGrid& g) {
    const std::size_t n = pts.size();
    const double eps2 = params.epsilon * params.epsilon;
    const std::size_t min_pts = params.min_pts;
    ClusterLabels out;
    out.core.assign(n, 0);

    for (std::size_t c = 0; c < g.n_cells(); ++c) {
        const auto own = g.cell(c);
        if (own.size() >= min_pts) {
            for (const auto i : own) out.core[i] = 1;
            continue;
        }
        for (const auto i : own) {
            std::size_t count = own.size();
            for (const auto nb : g.neighbours[c]) {
                if (nb == c) continue;
                for (const auto j : g.cell(nb)) {
                    if (dist2(pts[i], pts[j]) <= eps2 && ++count >= min_pts) break;
                }
                if (count >= min_pts) break;
            }
            if (count >= min_pts) out.core[i] = 1;
        }
    }

    std::vector<std::vector<std::size_t>> cores(g.n_cells());
    for (std::size_t c = 0; c < g.n_cells(); ++c) {
        for (const auto i : g.cell(c)) {
            if (out.core[i]) cores[c].push_back(i);
        }
    }

    DisjointSet cells(g.n_cells());
    for (std::size_t c = 0; c < g.n_cells(); ++c) {
        if (cores[c].empty()) continue;
        for (const auto nb : g.neighbours[c]) {
            if (nb <= c || cores[nb].empty() || cells.find(c) == cells.find(nb)) continue;
            bool linked = false;
            for (const auto i : cores[c]) {
                for (const auto j : cores[nb]) {
                    if (dist2(pts[i], pts[j]) <= eps2) {
                        linked = true;
                        break;
                    }
                }
                if (linked) break;
            }
            if (linked) cells.unite(c, nb);
        }
    }

    out.labels.assign(n, 0);
    std::vector<int> cluster_of_root(g.n_cells(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!out.core[i]) continue;
        const std::size_t root = cells.find(g.point_cell[i]);
        if (cluster_of_root[root] == 0) cluster_of_root[root] = ++out.n_clusters;
        out.labels[i] = cluster_of_root[root];
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (out.core[i]) continue;
        int best = 0;
        for (const auto nb : g.neighbours[g.point_cell[i]]) {
            for (const auto j : cores[nb]) {
                if (dist2(pts[i], pts[j]) <= eps2 && (best == 0 || out.labels[j] < best)) {
                    best = out.labels[j];
                }
            }
        }
        out.labels[i] = best;
    }
    return out;
}

// All-pairs fallback for coordinates a grid cannot index.
ClusterLabels dbscan_all_pairs(const PointSet2D& pts, const DbscanParams& params) {
    const std::size_t n = pts.size();
    const double eps2 = params.epsilon * params.epsilon;
    ClusterLabels out;
    out.core.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t count = 0;
        for (std::size_t j = 0; j < n && count < params.min_pts; ++j) {
            if (dist2(pts[i], pts[j]) <= eps2) ++count;
        }
        if (count >= params.min_pts) out.core[i] = 1;
    }
    out.labels.assign(n, 0);
    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i) {
        if (!out.core[i] || out.labels[i] != 0) continue;
        const int id = ++out.n_clusters;
        out.labels[i] = id;
        queue.assign(1, i);
        while (!queue.empty()) {
            const std::size_t p = queue.back();
            queue.pop_back();
            for (std::size_t j = 0; j < n; ++j) {
                if (out.labels[j] != 0 || dist2(pts[p], pts[j]) > eps2) continue;
                out.labels[j] = id;
                if (out.core[j]) queue.push_back(j);
            }
        }
    }
    return out;
}

}  // namespace

PointSet2D::PointSet2D(std::vector<Point2D> points, std::vector<std::size_t> source_index)
    : points_(std::move(points)), source_index_(std::move(source_index)) {
    if (source_index_.empty()) {
        source_index_.resize(points_.size());
        std::iota(source_index_.begin(), source_index_.end(), std::size_t{0});
    }
    if (source_index_.size() != points_.size()) {
        throw Error(ErrorCode::validation, "source index count differs from point count");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y)) {
            throw Error(ErrorCode::validation, "point " + std::to_string(i) + " is not finite");
        }
    }
    auto sorted = source_index_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error(ErrorCode::validation, "source indices are not unique");
    }
}

void DbscanParams::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw Error(ErrorCode::config, "DBSCAN epsilon must be positive");
    }
    if (min_pts < 1) throw Error(ErrorCode::config, "DBSCAN min_pts must be >= 1");
}

std::size_t ClusterLabels::n_noise() const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 0));
}

ClusterLabels dbscan(const PointSet2D& points, const DbscanParams& params) {
    params.validate();
    if (points.empty()) throw Error(ErrorCode::empty_input, "DBSCAN needs at least one point");
    if (const auto grid = build_eps_grid(points, params.epsilon)) {
        return dbscan_grid(points, params, *grid);
    }
    return dbscan_all_pairs(points, params);
}

EpsilonEstimate estimate_epsilon(const PointSet2D& points, std::size_t k) {
    const std::size_t n = points.size();
    if (k < 1 || n <= k) {
        throw Error(ErrorCode::domain, "k-distance needs more than k points (k=" +
                                           std::to_string(k) + ", n=" + std::to_string(n) + ")");
    }
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = min_x;
    double max_x = -min_x;
    double max_y = -min_x;
    for (const auto& p : points.points()) {
        min_x = std::min(min_x, p.x);
        min_y = std::min(min_y, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    EpsilonEstimate est;
    est.k_distance.assign(n, 0.0);
    const double extent = std::max(max_x - min_x, max_y - min_y);
    if (extent > 0.0) {
        // about two points per cell along the larger extent
        const auto per_side = static_cast<std::size_t>(
            std::max(1.0, std::ceil(std::sqrt(static_cast<double>(n) / 2.0))));
        const double side = extent / static_cast<double>(per_side);
        const auto nx = static_cast<std::int64_t>(std::floor((max_x - min_x) / side)) + 1;
        const auto ny = static_cast<std::int64_t>(std::floor((max_y - min_y) / side)) + 1;
        auto cell_x = [&](const Point2D& p) {
            return std::min(nx - 1, static_cast<std::int64_t>(std::floor((p.x - min_x) / side)));
        };
        auto cell_y = [&](const Point2D& p) {
            return std::min(ny - 1, static_cast<std::int64_t>(std::floor((p.y - min_y) / side)));
        };
        std::vector<std::size_t> begin(static_cast<std::size_t>(nx * ny) + 1, 0);
        std::vector<std::size_t> cell(n);
        for (std::size_t i = 0; i < n; ++i) {
            cell[i] = static_cast<std::size_t>(cell_x(points[i]) * ny + cell_y(points[i]));
            ++begin[cell[i] + 1];
        }
        std::partial_sum(begin.begin(), begin.end(), begin.begin());
        std::vector<std::size_t> members(n);
        std::vector<std::size_t> fill(begin.begin(), begin.end() - 1);
        for (std::size_t i = 0; i < n; ++i) members[fill[cell[i]]++] = i;

        std::priority_queue<double> best;
        for (std::size_t i = 0; i < n; ++i) {
            best = {};
            const auto cx = cell_x(points[i]);
            const auto cy = cell_y(points[i]);
            auto visit = [&](std::int64_t x, std::int64_t y) {
                if (x < 0 || y < 0 || x >= nx || y >= ny) return;
                const auto c = static_cast<std::size_t>(x * ny + y);
                for (std::size_t m = begin[c]; m < begin[c + 1]; ++m) {
                    const std::size_t j = members[m];
                    if (j == i) continue;
                    const double d = dist2(points[i], points[j]);
                    if (best.size() < k) {
                        best.push(d);
                    } else if (d < best.top()) {
                        best.pop();
                        best.push(d);
                    }
                }
            };
            const std::int64_t max_ring = std::max(nx, ny);
            for (std::int64_t r = 0; r <= max_ring; ++r) {
                if (r == 0) {
                    visit(cx, cy);
                } else {
                    for (std::int64_t d = -r; d <= r; ++d) {
                        visit(cx + d, cy - r);
                        visit(cx + d, cy + r);
                    }
                    for (std::int64_t d = -r + 1; d <= r - 1; ++d) {
                        visit(cx - r, cy + d);
                        visit(cx + r, cy + d);
                    }
                }
                const double reach = static_cast<double>(r) * side;
                if (best.size() == k && best.top() <= reach * reach) break;
            }
            est.k_distance[i] = std::sqrt(best.top());
        }
        std::sort(est.k_distance.begin(), est.k_distance.end());
    }

    // knee: largest distance from the chord (the chord is fixed, so the
    // vertical offset has the same argmax)
    const auto& d = est.k_distance;
    const double last = static_cast<double>(n - 1);
    const double rise = d[n - 1] - d[0];
    double best_offset = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double offset =
            std::abs(rise * static_cast<double>(i) - last * (d[i] - d[0]));
        if (offset > best_offset) {
            best_offset = offset;
            est.knee_index = i;
        }
    }
    est.epsilon = d[est.knee_index];
    est.degenerate = !(est.epsilon > 0.0);
    return est;
}

std::size_t min_pts_heuristic(std::size_t n_samples) {
    if (n_samples == 0) throw Error(ErrorCode::domain, "min_pts heuristic needs n >= 1");
    const auto rounded = std::llround(std::log10(static_cast<double>(n_samples)));
    return std::max<std::size_t>(4, static_cast<std::size_t>(rounded));
}

}  // namespace plantclean
