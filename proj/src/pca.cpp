#include "plantclean/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "plantclean/error.hpp"
#include "plantclean/segment_stats.hpp"

namespace plantclean {

namespace {

bool zero_variance(double mean, double sd) { return !(sd > 1e-12 * (1.0 + std::abs(mean))); }

StandardizedMatrix standardize_columns(const Eigen::MatrixXd& raw, std::vector<std::string> ids) {
    const Eigen::Index n = raw.rows();
    const Eigen::Index m = raw.cols();
    if (n < 2) throw Error(ErrorCode::too_short, "standardize needs at least 2 samples");
    if (ids.empty()) {
        for (Eigen::Index j = 0; j < m; ++j) ids.push_back("c" + std::to_string(j));
    }
    StandardizedMatrix out;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto col = raw.col(j);
        const auto st = SegmentStats::batch(std::span<const double>(col.data(), col.size()));
        const double sd = st.stddev();
        if (zero_variance(st.mean(), sd)) {
            out.excluded_ids.push_back(ids[static_cast<std::size_t>(j)]);
            continue;
        }
        keep.push_back(j);
        out.col_means.push_back(st.mean());
        out.col_stds.push_back(sd);
        out.retained_ids.push_back(ids[static_cast<std::size_t>(j)]);
    }
    if (keep.empty()) throw Error(ErrorCode::degenerate, "every column has zero variance");
    out.data.resize(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const auto c = static_cast<Eigen::Index>(k);
        out.data.col(c) = (raw.col(keep[k]).array() - out.col_means[k]) / out.col_stds[k];
    }
    return out;
}

}  // namespace

StandardizedMatrix standardize(const Dataset& dataset) {
    const auto n = static_cast<Eigen::Index>(dataset.n_samples());
    const auto m = static_cast<Eigen::Index>(dataset.n_signals());
    Eigen::MatrixXd raw(n, m);
    std::vector<std::string> ids;
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto& s = dataset.signal(static_cast<std::size_t>(j));
        if (std::any_of(s.missing.begin(), s.missing.end(), [](std::uint8_t f) { return f != 0; })) {
            throw Error(ErrorCode::pipeline_order,
                        "signal '" + s.id + "' still has missing values; impute before PCA");
        }
        raw.col(j) = Eigen::Map<const Eigen::VectorXd>(s.values.data(), n);
        ids.push_back(s.id);
    }
    return standardize_columns(raw, std::move(ids));
}

StandardizedMatrix standardize(const Eigen::MatrixXd& raw, std::vector<std::string> ids) {
    if (!ids.empty() && ids.size() != static_cast<std::size_t>(raw.cols())) {
        throw Error(ErrorCode::validation, "column id count differs from matrix width");
    }
    if (!raw.allFinite()) throw Error(ErrorCode::pipeline_order, "matrix has non-finite values");
    return standardize_columns(raw, std::move(ids));
}

std::vector<double> PcaModel::all_explained_ratio() const {
    const double total = std::accumulate(all_eigenvalues.begin(), all_eigenvalues.end(), 0.0);
    std::vector<double> out(all_eigenvalues.size(), 0.0);
    if (total > 0.0) {
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = all_eigenvalues[j] / total;
    }
    return out;
}

PcaFit fit_pca(const StandardizedMatrix& x, std::size_t n_components) {
    return fit_pca(x.data, n_components);
}

PcaFit fit_pca(const Eigen::MatrixXd& x, std::size_t n_components) {
    const Eigen::Index n = x.rows();
    const Eigen::Index m = x.cols();
    if (n_components < 1 || n_components > static_cast<std::size_t>(m)) {
        throw Error(ErrorCode::config, "n_components must be in [1, " + std::to_string(m) +
                                           "], got " + std::to_string(n_components));
    }
    if (n < 2) throw Error(ErrorCode::too_short, "PCA needs at least 2 samples");

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= static_cast<double>(n - 1);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::numeric, "eigensolver did not converge on a " + std::to_string(m) +
                                            "x" + std::to_string(m) + " covariance (trace " +
                                            std::to_string(cov.trace()) + ")");
    }
    // Eigen returns ascending order
    const auto& evals = solver.eigenvalues();
    const auto& evecs = solver.eigenvectors();

    PcaFit fit;
    auto& model = fit.model;
    model.n_components = n_components;
    model.all_eigenvalues.resize(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
        model.all_eigenvalues[static_cast<std::size_t>(j)] = std::max(0.0, evals(m - 1 - j));
    }
    const double total =
        std::accumulate(model.all_eigenvalues.begin(), model.all_eigenvalues.end(), 0.0);

    const auto a = static_cast<Eigen::Index>(n_components);
    model.loadings.resize(m, a);
    for (Eigen::Index k = 0; k < a; ++k) {
        Eigen::VectorXd v = evecs.col(m - 1 - k);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        model.loadings.col(k) = v;
        const double lambda = model.all_eigenvalues[static_cast<std::size_t>(k)];
        model.eigenvalues.push_back(lambda);
        model.explained_ratio.push_back(total > 0.0 ? lambda / total : 0.0);
    }
    fit.scores = x * model.loadings;
    return fit;
}

Eigen::MatrixXd reconstruct(const PcaModel& model, const Eigen::MatrixXd& scores) {
    if (scores.cols() != model.loadings.cols()) {
        throw Error(ErrorCode::validation, "score matrix has " + std::to_string(scores.cols()) +
                                               " columns, model has " +
                                               std::to_string(model.loadings.cols()));
    }
    return scores * model.loadings.transpose();
}

std::vector<double> hotelling_t2(const Eigen::MatrixXd& scores, std::span<const double> eigenvalues,
                                 std::optional<double> eigenvalue_floor) {
    if (static_cast<std::size_t>(scores.cols()) != eigenvalues.size()) {
        throw Error(ErrorCode::validation, "score columns and eigenvalue count differ");
    }
    if (eigenvalues.empty()) throw Error(ErrorCode::validation, "no components given");
    const double lambda1 = *std::max_element(eigenvalues.begin(), eigenvalues.end());
    const double floor = eigenvalue_floor.value_or(1e-12 * lambda1);
    Eigen::VectorXd inv(static_cast<Eigen::Index>(eigenvalues.size()));
    for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
        if (!(eigenvalues[j] > floor)) {
            throw Error(ErrorCode::degenerate,
                        "eigenvalue " + std::to_string(j + 1) + " (" +
                            std::to_string(eigenvalues[j]) +
                            ") is not above the floor; reduce the number of components");
        }
        inv(static_cast<Eigen::Index>(j)) = 1.0 / eigenvalues[j];
    }
    const Eigen::VectorXd t2 = scores.array().square().matrix() * inv;
    return std::vector<double>(t2.data(), t2.data() + t2.size());
}

std::size_t T2Series::n_flagged() const noexcept {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

T2Series make_t2_series(std::vector<double> values, double threshold, double alpha) {
    T2Series out;
    out.flags.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out.flags[i] = values[i] > threshold ? 1 : 0;
    out.values = std::move(values);
    out.threshold = threshold;
    out.alpha = alpha;
    return out;
}

std::vector<OutlierPeriod> group_outlier_periods(const T2Series& t2) {
    return group_outlier_periods(t2.flags);
}

std::vector<OutlierPeriod> group_outlier_periods(MaskView flags) {
    std::vector<OutlierPeriod> out;
    std::size_t i = 0;
    while (i < flags.size()) {
        if (!flags[i]) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < flags.size() && flags[i]) ++i;
        out.push_back(OutlierPeriod{start, i, i - start});
    }
    return out;
}

}  // namespace plantclean
