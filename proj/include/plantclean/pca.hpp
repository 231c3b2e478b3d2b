#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plantclean/series.hpp"

namespace plantclean {

/// Column z-scores of a dataset. Zero-variance columns are dropped and listed
/// in `excluded_ids`; `data` holds only the retained columns, in order.
struct StandardizedMatrix {
    Eigen::MatrixXd data;
    std::vector<double> col_means;
    std::vector<double> col_stds;
    std::vector<std::string> retained_ids;
    std::vector<std::string> excluded_ids;

    std::size_t n_samples() const noexcept { return static_cast<std::size_t>(data.rows()); }
    std::size_t n_columns() const noexcept { return static_cast<std::size_t>(data.cols()); }
};

/// Throws `Error(pipeline_order)` if any value is still missing and
/// `Error(degenerate)` if every column is constant.
StandardizedMatrix standardize(const Dataset& dataset);

/// Same on a raw N x M matrix; `ids` may be empty (columns named c0, c1, ...).
StandardizedMatrix standardize(const Eigen::MatrixXd& raw, std::vector<std::string> ids = {});

struct PcaModel {
    /// M x A, orthonormal columns.
    Eigen::MatrixXd loadings;
    /// Top A eigenvalues, non-increasing, >= 0.
    std::vector<double> eigenvalues;
    std::size_t n_components = 0;
    /// eigenvalue / sum of all M eigenvalues, for the retained components.
    std::vector<double> explained_ratio;
    /// All M eigenvalues of the covariance, non-increasing.
    std::vector<double> all_eigenvalues;

    /// explained ratio over all M components.
    std::vector<double> all_explained_ratio() const;
};

struct PcaFit {
    PcaModel model;
    /// N x A scores, X * loadings.
    Eigen::MatrixXd scores;
};

/// Eigendecomposition of the sample covariance X^T X / (N - 1). Each loading
/// vector is signed so that its largest-magnitude entry is positive.
/// Throws `Error(config)` unless 1 <= A <= M, `Error(numeric)` if the solver
/// fails.
PcaFit fit_pca(const StandardizedMatrix& x, std::size_t n_components);
PcaFit fit_pca(const Eigen::MatrixXd& x, std::size_t n_components);

/// scores * loadings^T. Throws `Error(validation)` on a shape mismatch.
Eigen::MatrixXd reconstruct(const PcaModel& model, const Eigen::MatrixXd& scores);

/// T^2(i) = sum_j t_ij^2 / lambda_j. The floor defaults to 1e-12 * lambda_1;
/// any eigenvalue at or below it throws `Error(degenerate)`.
std::vector<double> hotelling_t2(const Eigen::MatrixXd& scores,
                                 std::span<const double> eigenvalues,
                                 std::optional<double> eigenvalue_floor = std::nullopt);

struct T2Series {
    std::vector<double> values;
    double threshold = 0.0;
    double alpha = 0.05;
    /// values[i] > threshold
    Mask flags;

    std::size_t n_flagged() const noexcept;
};

T2Series make_t2_series(std::vector<double> values, double threshold, double alpha);

/// Maximal run [start, end) of flagged samples.
struct OutlierPeriod {
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t n_points = 0;

    friend bool operator==(const OutlierPeriod&, const OutlierPeriod&) = default;
};

std::vector<OutlierPeriod> group_outlier_periods(const T2Series& t2);
std::vector<OutlierPeriod> group_outlier_periods(MaskView flags);

}  // namespace plantclean
