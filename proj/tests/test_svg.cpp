#include "catch_amalgamated.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "plantclean/error.hpp"
#include "plantclean/pipeline.hpp"
#include "plantclean/svg.hpp"
#include "plantclean/synthetic.hpp"

using namespace plantclean;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream o;
    o << in.rdbuf();
    return o.str();
}

bool well_formed(const std::string& svg) {
    std::istringstream in(svg);
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_xml(in, tree);
    } catch (const boost::property_tree::xml_parser_error&) {
        return false;
    }
    return tree.count("svg") == 1;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

// Small seeded run used for the golden figures.
void golden_run(const fs::path& out) {
    SyntheticSpec spec;
    spec.n_samples = 600;
    spec.noise_sigma = {1.0, 0.5, 2.0};
    spec.signal_ids = {"T1", "P2", "F3"};
    spec.n_latent = 1;
    spec.latent_shape = LatentShape::uniform;
    spec.segment_plan = {{{0, 0.0}, {300, 6.0}}, {{0, 10.0}}, {{0, -3.0}, {150, 5.0}}};
    spec.spike_rate = 0.01;
    spec.fault_windows.push_back(FaultWindow{400, 430, {"T1", "P2"}, 12.0});
    spec.seed = 5;
    PipelineConfig cfg;
    cfg.output_dir = out;
    cfg.threads = 1;
    run_pipeline(generate_synthetic(spec).dataset, cfg);
}

}  // namespace

TEST_CASE("three-point line lands on hand-scaled pixels", "[svg]") {
    Chart c;
    c.x_min = 0.0;
    c.x_max = 2.0;
    c.y_min = 0.0;
    c.y_max = 10.0;
    c.lines.push_back(LineSeries{{0, 1, 2}, {0, 5, 10}});
    // plot area is 710 x 305 starting at (70, 40)
    const auto svg = render_svg(c);
    CHECK(svg.find("d=\"M70.00 345.00 L425.00 192.50 L780.00 40.00\"") != std::string::npos);
    CHECK(well_formed(svg));
    const auto f = frame_for(c);
    CHECK(f.px(1.0) == Catch::Approx(425.0));
    CHECK(f.py(5.0) == Catch::Approx(192.5));
}

TEST_CASE("empty scatter still draws axes", "[svg]") {
    Chart c;
    c.title = "outlier map";
    c.scatters.push_back(ScatterSeries{});
    const auto svg = render_svg(c);
    CHECK(well_formed(svg));
    CHECK(count_of(svg, "<circle") == 0);
    CHECK(svg.find("<line") != std::string::npos);
}

TEST_CASE("long lines are decimated per pixel column", "[svg]") {
    LineSeries s;
    for (int i = 0; i < 100000; ++i) {
        s.x.push_back(i);
        s.y.push_back(i % 7 == 0 ? 10.0 : 0.0);
    }
    Chart c;
    c.lines.push_back(s);
    const auto svg = render_svg(c);
    CHECK(svg.size() < 200000);
    CHECK(well_formed(svg));
    // the extremes survive decimation
    CHECK(svg.find(" 40.00") != std::string::npos);
    CHECK(svg.find(" 345.00") != std::string::npos);
}

TEST_CASE("text is escaped", "[svg]") {
    Chart c;
    c.title = "a < b & \"c\"";
    CHECK(well_formed(render_svg(c)));
}

TEST_CASE("render output is deterministic", "[svg][property]") {
    Chart c;
    c.bars = BarSeries{{"PC1", "PC2"}, {0.6, 0.3}};
    c.rules.push_back(HorizontalRule{0.5, "#000", "limit"});
    CHECK(render_svg(c) == render_svg(c));
}

TEST_CASE("figures match the committed golden files", "[svg][golden]") {
    const auto out = fs::temp_directory_path() / "plantclean_golden";
    fs::remove_all(out);
    golden_run(out);
    const fs::path golden = GOLDEN_DIR;
    if (std::getenv("PLANTCLEAN_UPDATE_GOLDEN")) {
        fs::create_directories(golden);
        for (const auto& e : fs::directory_iterator(out / "figures")) {
            fs::copy_file(e.path(), golden / e.path().filename(), fs::copy_options::overwrite_existing);
        }
    }
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(out / "figures")) {
        const auto name = e.path().filename();
        INFO(name.string());
        REQUIRE(fs::exists(golden / name));
        const auto got = slurp(e.path());
        CHECK(got == slurp(golden / name));
        CHECK(well_formed(got));
        ++compared;
    }
    CHECK(compared == 8);  // stn, 3 signals, explained variance, t2, map, clusters
    fs::remove_all(out);
}

TEST_CASE("missing artifacts are an io error", "[svg]") {
    const auto dir = fs::temp_directory_path() / "plantclean_no_artifacts";
    fs::remove_all(dir);
    fs::create_directories(dir);
    try {
        render_figures(dir, dir / "figures");
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::io);
    }
    fs::remove_all(dir);
}
