#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace plantclean {

struct LineSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    std::string label;
    bool dashed = false;
    /// Draw as a step function (value holds until the next x).
    bool step = false;
};

struct ScatterSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#d62728";
    std::string label;
    double radius = 2.0;
};

struct BarSeries {
    std::vector<std::string> categories;
    std::vector<double> values;
    std::string color = "#4c72b0";
};

struct HorizontalRule {
    double y = 0.0;
    std::string color = "#d62728";
    std::string label;
};

/// One chart. Axis ranges default to the data extent (padded when flat).
struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 800;
    int height = 400;
    std::optional<double> x_min, x_max, y_min, y_max;
    std::vector<LineSeries> lines;
    std::vector<ScatterSeries> scatters;
    std::optional<BarSeries> bars;
    std::vector<HorizontalRule> rules;
};

/// Plot-area geometry; exposed so callers can map data to pixels.
struct ChartFrame {
    double left = 70.0;
    double right = 20.0;
    double top = 40.0;
    double bottom = 55.0;
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    int width = 800;
    int height = 400;

    double px(double x) const;
    double py(double y) const;
};

ChartFrame frame_for(const Chart& chart);

/// SVG 1.1 document. Lines longer than two points per pixel column are
/// reduced to first/min/max/last per column; scatter points to one per
/// pixel cell. Output depends only on the chart contents.
std::string render_svg(const Chart& chart);

/// Reads the pipeline exports in `artifact_dir` and writes stn.svg,
/// signal_<id>.svg, explained_variance.svg, t2.svg, outlier_map.svg and
/// clusters.svg into `figure_dir`. Throws `Error(io)` naming a missing file.
void render_figures(const std::filesystem::path& artifact_dir,
                    const std::filesystem::path& figure_dir);

}  // namespace plantclean
