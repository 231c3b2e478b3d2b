#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "plantclean/dbscan.hpp"
#include "plantclean/error.hpp"
#include "plantclean/pipeline.hpp"
#include "plantclean/report.hpp"
#include "plantclean/synthetic.hpp"

using namespace plantclean;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("plantclean_pipeline_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream o;
    o << in.rdbuf();
    return o.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    return out;
}

SyntheticSpec quiet_spec() {
    SyntheticSpec s;
    s.n_samples = 3000;
    s.noise_sigma.assign(6, 0.1);
    s.n_latent = 2;
    s.latent_shape = LatentShape::uniform;
    s.seed = 9;
    return s;
}

SyntheticSpec faulty_spec() {
    auto s = quiet_spec();
    // noise dominates the drift so spikes stand out inside each piece
    s.noise_sigma.assign(6, 1.0);
    s.loadings_scale = 0.5;
    s.spike_rate = 0.005;
    s.spike_amplitude = 8.0;
    s.fault_windows.push_back(FaultWindow{1200, 1400, {"S01", "S02", "S03", "S04"}, 6.0});
    return s;
}

PipelineConfig config_for(const fs::path& out) {
    PipelineConfig c;
    c.output_dir = out;
    c.threads = 2;
    return c;
}

}  // namespace

TEST_CASE("clean synthetic data raises nothing", "[pipeline]") {
    const auto out = scratch("quiet");
    const auto data = generate_synthetic(quiet_spec());
    const auto res = run_pipeline(data.dataset, config_for(out));
    std::size_t cps = 0;
    for (const auto& s : res.report.signals) cps += s.change_points.size();
    CHECK(cps == 0);
    CHECK(res.report.periods.empty());
    CHECK(res.report.n_t2_flags == 0);
    for (const char* f : {"report.txt", "changepoints.csv", "cleaned.csv", "mask.csv", "t2.csv",
                          "periods.csv", "outlier_map.csv", "labels.csv", "explained_variance.csv",
                          "stn.csv", "figures/t2.svg", "figures/outlier_map.svg"}) {
        CHECK(fs::exists(out / f));
    }
    CHECK_FALSE(fs::exists(out / ".plantclean-staging"));
    fs::remove_all(out);
}

TEST_CASE("fault window shows up as a T2 period", "[pipeline]") {
    const auto data = generate_synthetic(faulty_spec());
    auto cfg = config_for("");
    const auto res = run_pipeline(data.dataset, cfg);
    bool overlaps = false;
    for (const auto& p : res.report.periods) overlaps |= p.start < 1400 && p.end > 1200;
    CHECK(overlaps);

    // spikes outside the fault are caught by the piece-wise test
    std::size_t hit = 0;
    for (const auto& sp : data.truth.spikes) hit += res.masks[sp.signal][sp.index] ? 1 : 0;
    REQUIRE_FALSE(data.truth.spikes.empty());
    CHECK(static_cast<double>(hit) >= 0.95 * static_cast<double>(data.truth.spikes.size()));
}

TEST_CASE("report totals are consistent", "[pipeline][property]") {
    const auto data = generate_synthetic(faulty_spec());
    const auto res = run_pipeline(data.dataset, config_for(""));
    std::size_t in_periods = 0;
    for (const auto& p : res.report.periods) in_periods += p.n_points;
    CHECK(in_periods == res.report.n_t2_flags);
    CHECK(res.t2.n_flagged() == res.report.n_t2_flags);
    for (std::size_t j = 0; j < res.masks.size(); ++j) {
        CHECK(res.report.signals[j].clean.n_outliers == res.masks[j].count());
    }
    std::size_t clustered = 0;
    for (const auto& c : res.report.clusters) clustered += c.n_points;
    CHECK(clustered + res.report.n_noise == res.labels.size());
}

TEST_CASE("same input and config give identical bytes", "[pipeline][property]") {
    const auto data = generate_synthetic(faulty_spec());
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    auto ca = config_for(a);
    auto cb = config_for(b);
    cb.threads = 1;
    run_pipeline(data.dataset, ca);
    run_pipeline(data.dataset, cb);
    const auto ta = tree(a);
    const auto tb = tree(b);
    CHECK(ta.size() > 10);
    CHECK(ta == tb);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("report document parses back", "[pipeline]") {
    const auto out = scratch("report");
    const auto data = generate_synthetic(faulty_spec());
    const auto res = run_pipeline(data.dataset, config_for(out));
    const auto doc = read_report(out / "report.txt");
    CHECK(doc.number("n_samples") == 3000.0);
    CHECK(doc.number("n_t2_flags") == static_cast<double>(res.report.n_t2_flags));
    CHECK(doc.number("t2_threshold") == Catch::Approx(res.report.t2_threshold).epsilon(1e-14));
    CHECK(doc.sections.at("signals").size() == 7);  // header + 6
    CHECK(doc.sections.at("periods").size() == res.report.periods.size() + 1);
    CHECK(*doc.value("epsilon_source") == "fixed");
    fs::remove_all(out);
}

TEST_CASE("missing values are filled before PCA", "[pipeline]") {
    auto data = generate_synthetic(quiet_spec()).dataset;
    auto sigs = data.signals();
    for (std::size_t i = 100; i < 3000; i += 250) {
        sigs[2].missing[i] = 1;
        sigs[2].values[i] = NAN;
    }
    const auto res = run_pipeline(data.with_signals(sigs), config_for(""));
    CHECK(res.report.n_filled_missing == 12);
    CHECK(res.pca.scores.allFinite());
}

TEST_CASE("estimated epsilon and heuristic min_pts", "[pipeline]") {
    const auto data = generate_synthetic(faulty_spec());
    auto cfg = config_for("");
    cfg.epsilon.reset();
    const auto res = run_pipeline(data.dataset, cfg);
    CHECK(res.report.epsilon_estimated);
    CHECK(res.report.epsilon > 0.0);
    CHECK(res.report.min_pts_heuristic);
    CHECK(res.report.min_pts == min_pts_heuristic(3000));
}

TEST_CASE("constant columns are dropped from PCA with a warning", "[pipeline]") {
    auto data = generate_synthetic(quiet_spec()).dataset;
    auto sigs = data.signals();
    sigs.push_back(Signal::from_values("flat", std::vector<double>(3000, 1.0)));
    const auto res = run_pipeline(Dataset::from_signals(sigs), config_for(""));
    CHECK(res.report.excluded_columns == std::vector<std::string>{"flat"});
    CHECK_FALSE(res.report.warnings.empty());
}

TEST_CASE("failures leave no output files", "[pipeline]") {
    const auto out = scratch("fail");
    const auto flat = Dataset::from_signals({Signal::from_values("A", std::vector<double>(500, 1.0)),
                                             Signal::from_values("B", std::vector<double>(500, 2.0))});
    try {
        run_pipeline(flat, config_for(out));
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::degenerate);
    }
    CHECK((!fs::exists(out) || fs::is_empty(out)));

    auto bad = config_for(out);
    bad.alpha = 1.5;
    CHECK_THROWS_AS(run_pipeline(generate_synthetic(quiet_spec()).dataset, bad), Error);
    bad = config_for(out);
    bad.n_components = 40;
    CHECK_THROWS_AS(run_pipeline(generate_synthetic(quiet_spec()).dataset, bad), Error);
    CHECK((!fs::exists(out) || fs::is_empty(out)));
    fs::remove_all(out);
}

TEST_CASE("series too short for the detector is reported", "[pipeline]") {
    const auto tiny = Dataset::from_signals({Signal::from_values("A", {1, 2, 3, 4, 5})});
    try {
        run_pipeline(tiny, config_for(""));
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::too_short);
        CHECK(std::string(e.what()).find("A") != std::string::npos);
    }
}
