#include "plantclean/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <ostream>
#include <thread>

#include "plantclean/dbscan.hpp"
#include "plantclean/error.hpp"
#include "plantclean/fdist.hpp"
#include "plantclean/random.hpp"
#include "plantclean/report.hpp"
#include "plantclean/svg.hpp"

namespace plantclean {

namespace {

constexpr double kDefaultEpsilon = 0.7;
constexpr std::size_t kEpsilonSampleCap = 20000;

template <class F>
auto in_stage(const std::string& stage, const std::string& signal, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        std::string where = "stage " + stage;
        if (!signal.empty()) where += " signal '" + signal + "'";
        throw Error(e.code(), where + ": " + e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        throw Error(ErrorCode::io, "stage " + stage + ": " + e.what());
    }
}

struct SignalOutcome {
    SignalReport report;
    std::vector<Piece> pieces;
    std::vector<Bounds> piece_bounds;
    OutlierMask mask;
    Signal cleaned;
    Signal filled;
    std::size_t n_filled = 0;
};

SignalOutcome clean_signal(const Signal& s, const PipelineConfig& config) {
    SignalOutcome out;
    auto& r = out.report;
    r.id = s.id;
    r.kind = s.kind;
    r.unit = s.unit;
    r.stn = in_stage("stn", s.id, [&] { return stn_ratio(s); });
    const auto global = in_stage("global-3sigma", s.id, [&] { return global_3sigma(s, config.spread); });
    r.global_bounds = global.bounds;
    r.global_outliers = global.mask.count();

    r.change_points = in_stage("changepoint", s.id, [&] {
        return detect_online(s.values, config.changepoint, s.missing);
    });
    std::vector<std::size_t> cps;
    for (const auto& cp : r.change_points) cps.push_back(cp.index);

    in_stage("piecewise-3sigma", s.id, [&] {
        out.pieces = pieces_from_changepoints(cps, s);
        out.mask = piecewise_3sigma(s, out.pieces, config.spread);
        for (const auto& p : out.pieces) out.piece_bounds.push_back(piece_bounds(s, p, config.spread));
        out.cleaned = impute_piecewise_mean(s, out.pieces, out.mask);
        r.clean = clean_diagnostics(s, out.pieces, out.mask);
        return 0;
    });

    // missing samples get the piece mean so PCA sees a complete matrix
    out.filled = out.cleaned;
    const double fallback = SegmentStats::batch(s.values, s.missing).mean();
    for (const auto& p : out.pieces) {
        const double fill = p.stats.count() > 0 ? p.stats.mean() : fallback;
        for (std::size_t i = p.start; i < p.end; ++i) {
            if (!out.filled.is_missing(i)) continue;
            out.filled.values[i] = fill;
            out.filled.missing[i] = 0;
            ++out.n_filled;
        }
    }
    return out;
}

std::vector<SignalOutcome> clean_all(const Dataset& data, const PipelineConfig& config) {
    const std::size_t m = data.n_signals();
    std::vector<SignalOutcome> outcomes(m);
    std::vector<std::exception_ptr> errors(m);
    unsigned workers = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
    workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(m));

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t j = next++; j < m; j = next++) {
            try {
                outcomes[j] = clean_signal(data.signal(j), config);
            } catch (...) {
                errors[j] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return outcomes;
}

std::vector<ClusterSummary> summarize_clusters(const std::vector<int>& labels, int n_clusters) {
    std::vector<ClusterSummary> out(static_cast<std::size_t>(n_clusters));
    for (int c = 0; c < n_clusters; ++c) out[static_cast<std::size_t>(c)].id = c + 1;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 0) continue;
        auto& c = out[static_cast<std::size_t>(labels[i] - 1)];
        ++c.n_points;
        if (!c.ranges.empty() && c.ranges.back().end == i) {
            ++c.ranges.back().end;
            ++c.ranges.back().n_points;
        } else {
            c.ranges.push_back(OutlierPeriod{i, i + 1, 1});
        }
    }
    return out;
}

EpsilonEstimate estimate_on_sample(const PointSet2D& map, std::size_t k, std::uint64_t seed) {
    if (map.size() <= kEpsilonSampleCap) return estimate_epsilon(map, k);
    std::vector<std::size_t> order(map.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = Rng::stream(seed, 7);
    for (std::size_t i = 0; i < kEpsilonSampleCap; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next() % (order.size() - i));
        std::swap(order[i], order[j]);
    }
    order.resize(kEpsilonSampleCap);
    std::sort(order.begin(), order.end());
    std::vector<Point2D> pts;
    pts.reserve(order.size());
    for (const auto i : order) pts.push_back(map[i]);
    return estimate_epsilon(PointSet2D(std::move(pts)), k);
}

class Staging {
public:
    explicit Staging(std::filesystem::path target) : target_(std::move(target)) {
        std::filesystem::create_directories(target_);
        dir_ = target_ / ".plantclean-staging";
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    Staging(const Staging&) = delete;
    Staging& operator=(const Staging&) = delete;
    ~Staging() {
        std::error_code ec;
        if (!committed_) std::filesystem::remove_all(dir_, ec);
    }

    const std::filesystem::path& dir() const noexcept { return dir_; }

    void write(const std::string& name, const std::function<void(std::ostream&)>& writer) {
        write_file_atomic(dir_ / name, writer);
        names_.push_back(name);
    }

    void commit(bool has_figures) {
        for (const auto& name : names_) std::filesystem::rename(dir_ / name, target_ / name);
        if (has_figures) {
            std::filesystem::remove_all(target_ / "figures");
            std::filesystem::rename(dir_ / "figures", target_ / "figures");
        }
        std::filesystem::remove_all(dir_);
        committed_ = true;
    }

private:
    std::filesystem::path target_;
    std::filesystem::path dir_;
    std::vector<std::string> names_;
    bool committed_ = false;
};

void write_outputs(const PipelineConfig& config, const Dataset& data, const PipelineResult& res,
                   const std::vector<SignalOutcome>& outcomes, const PointSet2D& map) {
    Staging staging(config.output_dir);
    const auto& ts = data.timestamps();
    const auto& rep = res.report;

    staging.write("changepoints.csv", [&](std::ostream& o) {
        o << "signal_id,index,timestamp,score\n";
        for (const auto& s : rep.signals) {
            for (const auto& cp : s.change_points) {
                o << s.id << ',' << cp.index << ',' << ts[cp.index].to_string() << ','
                  << format_value(cp.score) << '\n';
            }
        }
    });
    staging.write("cleaned.csv", [&](std::ostream& o) { write_csv(res.cleaned, o); });
    staging.write("mask.csv", [&](std::ostream& o) {
        o << "signal_id,index,raw_value,imputed_value\n";
        for (std::size_t j = 0; j < outcomes.size(); ++j) {
            const auto& raw = data.signal(j);
            const auto& imputed = res.cleaned.signal(j);
            for (std::size_t i = 0; i < raw.size(); ++i) {
                if (!res.masks[j][i]) continue;
                o << raw.id << ',' << i << ',' << format_value(raw.values[i]) << ','
                  << format_value(imputed.values[i]) << '\n';
            }
        }
    });
    staging.write("pieces.csv", [&](std::ostream& o) {
        o << "signal_id,start,end,n_present,mean,lower,upper\n";
        for (const auto& oc : outcomes) {
            for (std::size_t k = 0; k < oc.pieces.size(); ++k) {
                const auto& p = oc.pieces[k];
                o << oc.report.id << ',' << p.start << ',' << p.end << ',' << p.stats.count() << ','
                  << format_value(p.stats.mean()) << ',' << format_value(oc.piece_bounds[k].lower)
                  << ',' << format_value(oc.piece_bounds[k].upper) << '\n';
            }
        }
    });
    staging.write("stn.csv", [&](std::ostream& o) {
        o << "signal_id,kind,unit,stn\n";
        for (const auto& s : rep.signals) {
            o << s.id << ',' << to_string(s.kind) << ',' << s.unit << ',' << format_value(s.stn)
              << '\n';
        }
    });
    staging.write("explained_variance.csv", [&](std::ostream& o) {
        o << "component,eigenvalue,ratio,cumulative\n";
        double cum = 0.0;
        for (std::size_t k = 0; k < rep.eigenvalues.size(); ++k) {
            cum += rep.explained_ratio[k];
            o << k + 1 << ',' << format_value(rep.eigenvalues[k]) << ','
              << format_value(rep.explained_ratio[k]) << ',' << format_value(cum) << '\n';
        }
    });
    staging.write("t2.csv", [&](std::ostream& o) {
        o << "index,timestamp,t2,flag\n";
        std::string line;
        for (std::size_t i = 0; i < res.t2.values.size(); ++i) {
            line = std::to_string(i);
            line += ',';
            line += ts[i].to_string();
            line += ',';
            line += format_value(res.t2.values[i]);
            line += res.t2.flags[i] ? ",1\n" : ",0\n";
            o << line;
        }
    });
    staging.write("periods.csv", [&](std::ostream& o) {
        o << "start,end,n_points\n";
        for (const auto& p : rep.periods) o << p.start << ',' << p.end << ',' << p.n_points << '\n';
    });
    staging.write("outlier_map.csv", [&](std::ostream& o) {
        o << "index,pc1,pc2,flag\n";
        for (std::size_t i = 0; i < map.size(); ++i) {
            o << map.source_index()[i] << ',' << format_value(map[i].x) << ','
              << format_value(map[i].y) << (res.t2.flags[i] ? ",1\n" : ",0\n");
        }
    });
    staging.write("labels.csv", [&](std::ostream& o) {
        o << "source_index,pc1,pc2,cluster_id\n";
        for (std::size_t i = 0; i < map.size(); ++i) {
            o << map.source_index()[i] << ',' << format_value(map[i].x) << ','
              << format_value(map[i].y) << ',' << res.labels[i] << '\n';
        }
    });
    staging.write("clusters.csv", [&](std::ostream& o) {
        o << "cluster_id,start,end,n_points\n";
        for (const auto& c : rep.clusters) {
            for (const auto& r : c.ranges) {
                o << c.id << ',' << r.start << ',' << r.end << ',' << r.n_points << '\n';
            }
        }
    });
    staging.write("report.txt", [&](std::ostream& o) { write_report(rep, o); });
    if (config.figures) {
        in_stage("figures", "", [&] {
            render_figures(staging.dir(), staging.dir() / "figures");
            return 0;
        });
    }
    staging.commit(config.figures);
}

}  // namespace

void PipelineConfig::validate() const {
    changepoint.validate();
    if (n_components < 1) throw Error(ErrorCode::config, "n_components must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::config, "alpha must lie in (0, 1)");
    if (epsilon && !(*epsilon > 0.0 && std::isfinite(*epsilon))) {
        throw Error(ErrorCode::config, "epsilon must be positive");
    }
    if (min_pts && *min_pts < 1) throw Error(ErrorCode::config, "min_pts must be >= 1");
}

PipelineResult run_pipeline(const Dataset& dataset, const PipelineConfig& config,
                            const LoadReport& load, const std::string& source) {
    config.validate();
    const std::size_t n = dataset.n_samples();

    auto outcomes = clean_all(dataset, config);

    RunReport rep;
    rep.input = source;
    rep.n_samples = n;
    rep.n_signals = dataset.n_signals();
    rep.load = load;
    rep.changepoint = config.changepoint;
    rep.spread = config.spread;
    std::vector<Signal> cleaned;
    std::vector<Signal> filled;
    std::vector<OutlierMask> masks;
    for (auto& oc : outcomes) {
        rep.signals.push_back(oc.report);
        rep.n_filled_missing += oc.n_filled;
        cleaned.push_back(std::move(oc.cleaned));
        filled.push_back(std::move(oc.filled));
        masks.push_back(std::move(oc.mask));
    }
    if (load.gap_warnings > 0) {
        rep.warnings.push_back(std::to_string(load.gap_warnings) + " timestamp gaps filled with " +
                               std::to_string(load.inserted_rows) + " missing rows");
    }

    const auto x = in_stage("standardize", "", [&] {
        return standardize(dataset.with_signals(std::move(filled)));
    });
    rep.excluded_columns = x.excluded_ids;
    for (const auto& id : x.excluded_ids) {
        rep.warnings.push_back("signal '" + id + "' has zero variance and is left out of PCA");
    }
    if (config.n_components > x.n_columns()) {
        throw Error(ErrorCode::config, "n_components " + std::to_string(config.n_components) +
                                           " exceeds the " + std::to_string(x.n_columns()) +
                                           " usable signals");
    }
    auto fit = in_stage("pca", "", [&] { return fit_pca(x, config.n_components); });
    rep.eigenvalues = fit.model.all_eigenvalues;
    rep.explained_ratio = fit.model.all_explained_ratio();
    rep.n_components = config.n_components;
    rep.alpha = config.alpha;

    auto t2_values = in_stage("t2", "", [&] { return hotelling_t2(fit.scores, fit.model.eigenvalues); });
    rep.t2_threshold =
        in_stage("t2", "", [&] { return t2_threshold(config.n_components, n, config.alpha); });
    auto t2 = make_t2_series(std::move(t2_values), rep.t2_threshold, config.alpha);
    rep.n_t2_flags = t2.n_flagged();
    rep.periods = group_outlier_periods(t2);

    std::vector<Point2D> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        pts[i] = Point2D{fit.scores(r, 0), fit.scores.cols() > 1 ? fit.scores(r, 1) : 0.0};
    }
    const PointSet2D map(std::move(pts));

    rep.min_pts_heuristic = !config.min_pts.has_value();
    rep.min_pts = config.min_pts ? *config.min_pts : min_pts_heuristic(n);
    if (config.epsilon) {
        rep.epsilon = *config.epsilon;
    } else {
        const std::size_t k = std::min(rep.min_pts, map.size() - 1);
        const auto est = in_stage("epsilon", "", [&] { return estimate_on_sample(map, k, config.seed); });
        rep.epsilon_estimated = true;
        if (est.degenerate) {
            rep.warnings.push_back("k-distance knee is 0 (duplicated points); epsilon falls back to 0.7");
            rep.epsilon = kDefaultEpsilon;
        } else {
            rep.epsilon = est.epsilon;
        }
    }
    const auto labels = in_stage("dbscan", "", [&] {
        return dbscan(map, DbscanParams{rep.epsilon, rep.min_pts});
    });
    rep.n_clusters = labels.n_clusters;
    rep.n_noise = labels.n_noise();
    rep.clusters = summarize_clusters(labels.labels, labels.n_clusters);

    PipelineResult res{std::move(rep), dataset.with_signals(std::move(cleaned)), std::move(masks),
                       std::move(fit), std::move(t2), labels.labels};
    if (!config.output_dir.empty()) {
        in_stage("output", "", [&] {
            write_outputs(config, dataset, res, outcomes, map);
            return 0;
        });
    }
    return res;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    if (config.input.empty()) throw Error(ErrorCode::config, "no input file given");
    config.validate();
    auto loaded = in_stage("load", "", [&] { return load_csv(config.input); });
    return run_pipeline(loaded.dataset, config, loaded.report, config.input.string());
}

}  // namespace plantclean
