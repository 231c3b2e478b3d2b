// plantclean command line front end.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plantclean/changepoint.hpp"
#include "plantclean/csv.hpp"
#include "plantclean/dbscan.hpp"
#include "plantclean/error.hpp"
#include "plantclean/fdist.hpp"
#include "plantclean/pca.hpp"
#include "plantclean/pipeline.hpp"
#include "plantclean/sigma_clean.hpp"
#include "plantclean/svg.hpp"
#include "plantclean/synthetic.hpp"

namespace fs = std::filesystem;
using namespace plantclean;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumeric = 4;

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::config: return kExitUsage;
        case ErrorCode::parse:
        case ErrorCode::validation:
        case ErrorCode::empty_input:
        case ErrorCode::too_short:
        case ErrorCode::io: return kExitInput;
        case ErrorCode::domain:
        case ErrorCode::degenerate:
        case ErrorCode::numeric:
        case ErrorCode::pipeline_order: return kExitNumeric;
    }
    return kExitNumeric;
}

struct SegmentFlags {
    std::size_t block = 10;
    std::size_t lmin = 60;
    double min_score = 15.0;

    ChangePointConfig config() const {
        ChangePointConfig c;
        c.block_size = block;
        c.min_piece_len = lmin;
        c.min_score = min_score;
        return c;
    }
};

void add_segment_flags(CLI::App* app, SegmentFlags& f) {
    app->add_option("--block", f.block, "samples per block (n)")->capture_default_str();
    app->add_option("--lmin", f.lmin, "minimum piece length L_min")->capture_default_str();
    app->add_option("--min-score", f.min_score, "log-likelihood ratio a candidate must reach")
        ->capture_default_str();
}

std::optional<double> parse_eps(const std::string& text) {
    if (text == "auto") return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::config, "--eps expects 'auto' or a number, got '" + text + "'");
    }
}

std::optional<std::size_t> parse_min_pts(const std::string& text) {
    if (text == "auto") return std::nullopt;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw Error(ErrorCode::config, "--min-pts expects 'auto' or an integer, got '" + text + "'");
    }
}

void write_changepoints(const Dataset& data, const std::vector<std::vector<ChangePoint>>& cps,
                        std::ostream& o) {
    o << "signal_id,index,timestamp,score\n";
    for (std::size_t j = 0; j < cps.size(); ++j) {
        for (const auto& cp : cps[j]) {
            o << data.signal(j).id << ',' << cp.index << ','
              << data.timestamps()[cp.index].to_string() << ',' << format_value(cp.score) << '\n';
        }
    }
}

int run_segment(const fs::path& input, const fs::path& out, const SegmentFlags& flags) {
    const auto data = load_csv(input).dataset;
    std::vector<std::vector<ChangePoint>> cps;
    for (const auto& s : data.signals()) cps.push_back(detect_online(s.values, flags.config(), s.missing));
    if (out.empty()) {
        write_changepoints(data, cps, std::cout);
    } else {
        write_file_atomic(out, [&](std::ostream& o) { write_changepoints(data, cps, o); });
    }
    return 0;
}

int run_clean(const fs::path& input, const fs::path& out, const SegmentFlags& flags,
              const std::string& spread_name) {
    const auto spread = parse_spread(spread_name);
    const auto data = load_csv(input).dataset;
    fs::create_directories(out);
    std::vector<Signal> cleaned;
    std::vector<OutlierMask> masks;
    std::vector<CleanReport> reports;
    for (const auto& s : data.signals()) {
        std::vector<std::size_t> idx;
        for (const auto& cp : detect_online(s.values, flags.config(), s.missing)) idx.push_back(cp.index);
        const auto pieces = pieces_from_changepoints(idx, s);
        masks.push_back(piecewise_3sigma(s, pieces, spread));
        cleaned.push_back(impute_piecewise_mean(s, pieces, masks.back()));
        reports.push_back(clean_diagnostics(s, pieces, masks.back()));
    }
    const auto result = data.with_signals(cleaned);
    write_file_atomic(out / "cleaned.csv", [&](std::ostream& o) { write_csv(result, o); });
    write_file_atomic(out / "mask.csv", [&](std::ostream& o) {
        o << "signal_id,index,raw_value,imputed_value\n";
        for (std::size_t j = 0; j < masks.size(); ++j) {
            for (std::size_t i = 0; i < masks[j].size(); ++i) {
                if (!masks[j][i]) continue;
                o << data.signal(j).id << ',' << i << ',' << format_value(data.signal(j).values[i])
                  << ',' << format_value(cleaned[j].values[i]) << '\n';
            }
        }
    });
    write_file_atomic(out / "clean_report.csv", [&](std::ostream& o) {
        o << "signal_id,mad,residual_std,n_changepoints,n_outliers,outlier_fraction\n";
        for (std::size_t j = 0; j < reports.size(); ++j) {
            const auto& r = reports[j];
            o << data.signal(j).id << ',' << format_value(r.mad) << ','
              << format_value(r.residual_std) << ',' << r.n_changepoints << ',' << r.n_outliers
              << ',' << format_value(r.outlier_fraction) << '\n';
        }
    });
    return 0;
}

int run_pca(const fs::path& input, const fs::path& out, std::size_t components, double alpha) {
    const auto data = load_csv(input).dataset;
    const auto x = standardize(data);
    if (components > x.n_columns()) {
        throw Error(ErrorCode::config, "--components exceeds the usable signal count");
    }
    const auto fit = fit_pca(x, components);
    const auto t2 = make_t2_series(hotelling_t2(fit.scores, fit.model.eigenvalues),
                                   t2_threshold(components, data.n_samples(), alpha), alpha);
    fs::create_directories(out);
    write_file_atomic(out / "explained_variance.csv", [&](std::ostream& o) {
        o << "component,eigenvalue,ratio,cumulative\n";
        const auto ratio = fit.model.all_explained_ratio();
        double cum = 0.0;
        for (std::size_t k = 0; k < ratio.size(); ++k) {
            cum += ratio[k];
            o << k + 1 << ',' << format_value(fit.model.all_eigenvalues[k]) << ','
              << format_value(ratio[k]) << ',' << format_value(cum) << '\n';
        }
    });
    write_file_atomic(out / "t2.csv", [&](std::ostream& o) {
        o << "index,timestamp,t2,flag\n";
        for (std::size_t i = 0; i < t2.values.size(); ++i) {
            o << i << ',' << data.timestamps()[i].to_string() << ',' << format_value(t2.values[i])
              << ',' << int{t2.flags[i]} << '\n';
        }
    });
    write_file_atomic(out / "periods.csv", [&](std::ostream& o) {
        o << "start,end,n_points\n";
        for (const auto& p : group_outlier_periods(t2)) {
            o << p.start << ',' << p.end << ',' << p.n_points << '\n';
        }
    });
    write_file_atomic(out / "outlier_map.csv", [&](std::ostream& o) {
        o << "index,pc1,pc2,flag\n";
        for (std::size_t i = 0; i < t2.values.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            o << i << ',' << format_value(fit.scores(r, 0)) << ','
              << format_value(fit.scores.cols() > 1 ? fit.scores(r, 1) : 0.0) << ','
              << int{t2.flags[i]} << '\n';
        }
    });
    std::cout << "t2_threshold = " << format_value(t2.threshold) << "\nn_t2_flags = "
              << t2.n_flagged() << '\n';
    return 0;
}

int run_cluster(const fs::path& input, const fs::path& out, const std::string& eps_text,
                const std::string& min_pts_text) {
    const auto data = load_csv(input).dataset;
    const auto c1 = data.find("pc1");
    const auto c2 = data.find("pc2");
    if (!c1 || !c2) throw Error(ErrorCode::validation, "input needs pc1 and pc2 columns");
    const auto& s1 = data.signal(*c1);
    const auto& s2 = data.signal(*c2);
    std::vector<Point2D> pts;
    std::vector<std::size_t> src;
    for (std::size_t i = 0; i < data.n_samples(); ++i) {
        if (s1.is_missing(i) || s2.is_missing(i)) continue;
        pts.push_back(Point2D{s1.values[i], s2.values[i]});
        src.push_back(i);
    }
    const PointSet2D map(std::move(pts), std::move(src));
    DbscanParams params;
    params.min_pts = parse_min_pts(min_pts_text).value_or(min_pts_heuristic(map.size()));
    if (const auto eps = parse_eps(eps_text)) {
        params.epsilon = *eps;
    } else {
        const auto est = estimate_epsilon(map, std::min(params.min_pts, map.size() - 1));
        if (est.degenerate) {
            std::cerr << "warning: k-distance knee is 0; using epsilon 0.7\n";
        } else {
            params.epsilon = est.epsilon;
        }
    }
    const auto labels = dbscan(map, params);
    auto write = [&](std::ostream& o) {
        o << "source_index,pc1,pc2,cluster_id\n";
        for (std::size_t i = 0; i < map.size(); ++i) {
            o << map.source_index()[i] << ',' << format_value(map[i].x) << ','
              << format_value(map[i].y) << ',' << labels.labels[i] << '\n';
        }
    };
    if (out.empty()) {
        write(std::cout);
    } else {
        write_file_atomic(out, write);
    }
    std::cerr << "epsilon = " << format_value(params.epsilon) << ", min_pts = " << params.min_pts
              << ", clusters = " << labels.n_clusters << ", noise = " << labels.n_noise() << '\n';
    return 0;
}

struct SynthFlags {
    fs::path out;
    fs::path truth;
    std::size_t samples = 5000;
    std::size_t signals = 8;
    std::size_t latent = 2;
    double loadings_scale = 1.0;
    std::string shape = "gaussian";
    double noise = 1.0;
    std::size_t jumps = 0;
    double jump_min = 3.0;
    double jump_max = 6.0;
    std::size_t jump_gap = 300;
    double spike_rate = 0.0;
    double spike_amplitude = 6.0;
    std::vector<std::string> faults;
    std::uint64_t seed = 0;
};

FaultWindow parse_fault(const std::string& text, const std::vector<std::string>& ids) {
    // start:end:count:value
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(':', start);
        parts.push_back(text.substr(start, pos == std::string::npos ? pos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    if (parts.size() != 4) {
        throw Error(ErrorCode::config, "--fault expects start:end:count:value, got '" + text + "'");
    }
    try {
        FaultWindow w;
        w.start = std::stoull(parts[0]);
        w.end = std::stoull(parts[1]);
        const auto count = std::stoull(parts[2]);
        w.value = std::stod(parts[3]);
        if (count > ids.size()) throw Error(ErrorCode::config, "--fault names more signals than exist");
        w.signal_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(count));
        return w;
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::config, "--fault expects start:end:count:value, got '" + text + "'");
    }
}

int run_synth(const SynthFlags& f) {
    SyntheticSpec spec;
    spec.n_samples = f.samples;
    spec.n_latent = f.latent;
    spec.loadings_scale = f.loadings_scale;
    if (f.shape == "gaussian") {
        spec.latent_shape = LatentShape::gaussian;
    } else if (f.shape == "uniform") {
        spec.latent_shape = LatentShape::uniform;
    } else if (f.shape == "smooth") {
        spec.latent_shape = LatentShape::smooth;
    } else {
        throw Error(ErrorCode::config, "--shape must be gaussian, uniform or smooth");
    }
    spec.noise_sigma.assign(f.signals, f.noise);
    for (std::size_t j = 0; j < f.signals; ++j) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "S%02zu", j + 1);
        spec.signal_ids.emplace_back(buf);
    }
    if (f.jumps > 0) {
        for (std::size_t j = 0; j < f.signals; ++j) {
            spec.segment_plan.push_back(random_level_plan(f.samples, f.jumps, f.jump_min * f.noise,
                                                          f.jump_max * f.noise, f.jump_gap,
                                                          f.seed * 7919 + j));
        }
    }
    spec.spike_rate = f.spike_rate;
    spec.spike_amplitude = f.spike_amplitude;
    for (const auto& text : f.faults) spec.fault_windows.push_back(parse_fault(text, spec.signal_ids));
    spec.seed = f.seed;
    const auto data = generate_synthetic(spec);
    write_file_atomic(f.out, [&](std::ostream& o) { write_csv(data.dataset, o); });
    if (!f.truth.empty()) {
        write_file_atomic(f.truth,
                          [&](std::ostream& o) { write_ground_truth(data.truth, data.dataset, o); });
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sensor data cleaning: change points, piece-wise 3 sigma, PCA/T2, DBSCAN"};
    app.set_config("--config", "", "TOML/INI file with option values");
    app.require_subcommand(1);

    // pipeline
    PipelineConfig pc;
    SegmentFlags pipe_seg;
    std::string pipe_spread = "std";
    std::string pipe_eps = "0.7";
    std::string pipe_min_pts = "auto";
    bool no_figures = false;
    auto* pipe = app.add_subcommand("pipeline", "run every stage and write all exports");
    pipe->add_option("--input", pc.input, "input CSV")->required();
    pipe->add_option("--out", pc.output_dir, "output directory")->capture_default_str();
    add_segment_flags(pipe, pipe_seg);
    pipe->add_option("--spread", pipe_spread, "std or mad")->capture_default_str();
    pipe->add_option("--components", pc.n_components, "components for T2")->capture_default_str();
    pipe->add_option("--alpha", pc.alpha, "T2 significance level")->capture_default_str();
    pipe->add_option("--eps", pipe_eps, "DBSCAN radius or 'auto'")->capture_default_str();
    pipe->add_option("--min-pts", pipe_min_pts, "DBSCAN min_pts or 'auto'")->capture_default_str();
    pipe->add_option("--seed", pc.seed, "seed for epsilon subsampling")->capture_default_str();
    pipe->add_option("--threads", pc.threads, "worker threads (0 = all cores)")->capture_default_str();
    pipe->add_flag("--no-figures", no_figures, "skip SVG output");

    // synth
    SynthFlags sf;
    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
    synth->add_option("--out", sf.out, "output CSV")->required();
    synth->add_option("--truth", sf.truth, "ground-truth CSV");
    synth->add_option("--samples", sf.samples)->capture_default_str();
    synth->add_option("--signals", sf.signals)->capture_default_str();
    synth->add_option("--latent", sf.latent, "latent factors")->capture_default_str();
    synth->add_option("--loadings-scale", sf.loadings_scale)->capture_default_str();
    synth->add_option("--shape", sf.shape, "gaussian, uniform or smooth latent factors")->capture_default_str();
    synth->add_option("--noise", sf.noise, "noise sigma per signal")->capture_default_str();
    synth->add_option("--jumps", sf.jumps, "mean steps per signal")->capture_default_str();
    synth->add_option("--jump-min", sf.jump_min, "smallest step, in noise sigmas")->capture_default_str();
    synth->add_option("--jump-max", sf.jump_max, "largest step, in noise sigmas")->capture_default_str();
    synth->add_option("--jump-gap", sf.jump_gap, "minimum spacing of steps")->capture_default_str();
    synth->add_option("--spike-rate", sf.spike_rate)->capture_default_str();
    synth->add_option("--spike-amplitude", sf.spike_amplitude, "in noise sigmas")->capture_default_str();
    synth->add_option("--fault", sf.faults, "start:end:count:value (first count signals)");
    synth->add_option("--seed", sf.seed)->capture_default_str();

    // segment
    fs::path seg_in, seg_out;
    SegmentFlags seg_flags;
    auto* seg = app.add_subcommand("segment", "detect change points per signal");
    seg->add_option("--input", seg_in)->required();
    seg->add_option("--out", seg_out, "CSV (stdout when absent)");
    add_segment_flags(seg, seg_flags);

    // clean
    fs::path clean_in, clean_out = "out";
    SegmentFlags clean_flags;
    std::string clean_spread = "std";
    auto* clean = app.add_subcommand("clean", "piece-wise 3 sigma cleaning");
    clean->add_option("--input", clean_in)->required();
    clean->add_option("--out", clean_out, "output directory")->capture_default_str();
    add_segment_flags(clean, clean_flags);
    clean->add_option("--spread", clean_spread, "std or mad")->capture_default_str();

    // pca
    fs::path pca_in, pca_out = "out";
    std::size_t pca_components = 2;
    double pca_alpha = 0.05;
    auto* pca = app.add_subcommand("pca", "PCA, T2 and outlier periods on a complete CSV");
    pca->add_option("--input", pca_in)->required();
    pca->add_option("--out", pca_out, "output directory")->capture_default_str();
    pca->add_option("--components", pca_components)->capture_default_str();
    pca->add_option("--alpha", pca_alpha)->capture_default_str();

    // cluster
    fs::path cl_in, cl_out;
    std::string cl_eps = "0.7";
    std::string cl_min_pts = "auto";
    std::uint64_t cl_seed = 0;
    auto* cluster = app.add_subcommand("cluster", "DBSCAN on an outlier-map CSV (pc1, pc2)");
    cluster->add_option("--input", cl_in)->required();
    cluster->add_option("--out", cl_out, "labels CSV (stdout when absent)");
    cluster->add_option("--eps", cl_eps, "radius or 'auto'")->capture_default_str();
    cluster->add_option("--min-pts", cl_min_pts, "integer or 'auto'")->capture_default_str();
    cluster->add_option("--seed", cl_seed, "accepted for symmetry; clustering is deterministic");

    // plot
    fs::path plot_in, plot_out;
    auto* plot = app.add_subcommand("plot", "render SVG figures from pipeline exports");
    plot->add_option("--input", plot_in, "pipeline output directory")->required();
    plot->add_option("--out", plot_out, "figure directory (default <input>/figures)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        (void)app.exit(e);
        return kExitUsage;
    }

    try {
        if (*pipe) {
            pc.changepoint = pipe_seg.config();
            pc.spread = parse_spread(pipe_spread);
            pc.epsilon = parse_eps(pipe_eps);
            pc.min_pts = parse_min_pts(pipe_min_pts);
            pc.figures = !no_figures;
            const auto res = run_pipeline(pc);
            const auto& r = res.report;
            std::cout << "signals " << r.n_signals << ", samples " << r.n_samples
                      << ", T2 limit " << format_value(r.t2_threshold) << ", flagged "
                      << r.n_t2_flags << ", periods " << r.periods.size() << ", clusters "
                      << r.n_clusters << "\nwrote " << pc.output_dir.string() << '\n';
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
            return 0;
        }
        if (*synth) return run_synth(sf);
        if (*seg) return run_segment(seg_in, seg_out, seg_flags);
        if (*clean) return run_clean(clean_in, clean_out, clean_flags, clean_spread);
        if (*pca) return run_pca(pca_in, pca_out, pca_components, pca_alpha);
        if (*cluster) return run_cluster(cl_in, cl_out, cl_eps, cl_min_pts);
        if (*plot) {
            render_figures(plot_in, plot_out.empty() ? plot_in / "figures" : plot_out);
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitUsage;
}
