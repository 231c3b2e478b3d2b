#include "plantclean/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "plantclean/csv.hpp"
#include "plantclean/error.hpp"
#include "plantclean/report.hpp"

namespace plantclean {

namespace {

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
    std::string s = ec == std::errc() ? std::string(buf, ptr) : std::string("0.00");
    if (s == "-0.00") s = "0.00";
    return s;
}

std::string tick_label(double v) {
    if (std::abs(v) < 1e-12) v = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void extend(double& lo, double& hi, const std::vector<double>& v) {
    for (const double x : v) {
        if (!std::isfinite(x)) continue;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
}

void pad_if_flat(double& lo, double& hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        lo = 0.0;
        hi = 1.0;
    } else if (lo == hi) {
        const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.05;
        lo -= d;
        hi += d;
    }
}

// Indices kept when drawing a long line: first/min/max/last per pixel column.
std::vector<std::size_t> decimate_line(const LineSeries& s, const ChartFrame& f) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    const double plot_w = f.width - f.left - f.right;
    if (static_cast<double>(n) <= 2.0 * plot_w) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        return all;
    }
    std::vector<std::size_t> keep;
    std::size_t i = 0;
    while (i < n) {
        const auto col = static_cast<long>(std::floor(f.px(s.x[i])));
        std::size_t first = i, lo = i, hi = i, last = i;
        while (i < n && static_cast<long>(std::floor(f.px(s.x[i]))) == col) {
            if (std::isfinite(s.y[i])) {
                if (!std::isfinite(s.y[lo]) || s.y[i] < s.y[lo]) lo = i;
                if (!std::isfinite(s.y[hi]) || s.y[i] > s.y[hi]) hi = i;
            }
            last = i;
            ++i;
        }
        std::size_t pick[] = {first, lo, hi, last};
        std::sort(std::begin(pick), std::end(pick));
        for (std::size_t k = 0; k < 4; ++k) {
            if (keep.empty() || keep.back() != pick[k]) keep.push_back(pick[k]);
        }
    }
    return keep;
}

void draw_line(std::ostringstream& o, const LineSeries& s, const ChartFrame& f) {
    const auto idx = decimate_line(s, f);
    std::string d;
    bool pen_down = false;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const std::size_t i = idx[k];
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
            pen_down = false;
            continue;
        }
        const double x = f.px(s.x[i]);
        const double y = f.py(s.y[i]);
        if (!pen_down) {
            d += (d.empty() ? "M" : " M") + num(x) + ' ' + num(y);
            pen_down = true;
        } else if (s.step) {
            d += " H" + num(x) + " V" + num(y);
        } else {
            d += " L" + num(x) + ' ' + num(y);
        }
    }
    if (d.empty()) return;
    o << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1\"";
    if (s.dashed) o << " stroke-dasharray=\"4 3\"";
    o << "/>\n";
}

void draw_scatter(std::ostringstream& o, const ScatterSeries& s, const ChartFrame& f) {
    std::set<std::pair<long, long>> taken;
    o << "<g fill=\"" << s.color << "\">\n";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        const double x = f.px(s.x[i]);
        const double y = f.py(s.y[i]);
        if (!taken.emplace(std::lround(x), std::lround(y)).second) continue;
        o << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(s.radius)
          << "\"/>\n";
    }
    o << "</g>\n";
}

}  // namespace

double ChartFrame::px(double x) const {
    return left + (x - x_min) / (x_max - x_min) * (width - left - right);
}

double ChartFrame::py(double y) const {
    const double h = height - top - bottom;
    return top + h - (y - y_min) / (y_max - y_min) * h;
}

ChartFrame frame_for(const Chart& c) {
    ChartFrame f;
    f.width = c.width;
    f.height = c.height;
    double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
    for (const auto& s : c.lines) {
        extend(x_lo, x_hi, s.x);
        extend(y_lo, y_hi, s.y);
    }
    for (const auto& s : c.scatters) {
        extend(x_lo, x_hi, s.x);
        extend(y_lo, y_hi, s.y);
    }
    for (const auto& r : c.rules) extend(y_lo, y_hi, {r.y});
    if (c.bars) {
        x_lo = std::min(x_lo, 0.0);
        x_hi = std::max(x_hi, static_cast<double>(c.bars->values.size()));
        extend(y_lo, y_hi, c.bars->values);
        y_lo = std::min(y_lo, 0.0);
    }
    f.x_min = c.x_min.value_or(x_lo);
    f.x_max = c.x_max.value_or(x_hi);
    f.y_min = c.y_min.value_or(y_lo);
    f.y_max = c.y_max.value_or(y_hi);
    pad_if_flat(f.x_min, f.x_max);
    pad_if_flat(f.y_min, f.y_max);
    return f;
}

std::string render_svg(const Chart& c) {
    const ChartFrame f = frame_for(c);
    const double x0 = f.left;
    const double x1 = f.width - f.right;
    const double y0 = f.top;
    const double y1 = f.height - f.bottom;
    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << f.width
      << "\" height=\"" << f.height << "\" viewBox=\"0 0 " << f.width << ' ' << f.height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(f.width / 2.0) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(c.title) << "</text>\n";

    // axes and ticks
    o << "<g stroke=\"#333\" stroke-width=\"1\">\n";
    o << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x1) << "\" y2=\""
      << num(y1) << "\"/>\n";
    o << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0) << "\" y2=\""
      << num(y1) << "\"/>\n";
    o << "</g>\n";
    o << "<g fill=\"#333\">\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = f.y_min + (f.y_max - f.y_min) * k / 4.0;
        const double ypx = f.py(yv);
        o << "<line x1=\"" << num(x0 - 4) << "\" y1=\"" << num(ypx) << "\" x2=\"" << num(x0)
          << "\" y2=\"" << num(ypx) << "\" stroke=\"#333\"/>\n";
        o << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(ypx + 4)
          << "\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
        if (!c.bars) {
            const double xv = f.x_min + (f.x_max - f.x_min) * k / 4.0;
            const double xpx = f.px(xv);
            o << "<line x1=\"" << num(xpx) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(xpx)
              << "\" y2=\"" << num(y1 + 4) << "\" stroke=\"#333\"/>\n";
            o << "<text x=\"" << num(xpx) << "\" y=\"" << num(y1 + 16)
              << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
        }
    }
    o << "</g>\n";
    o << "<text x=\"" << num((x0 + x1) / 2.0) << "\" y=\"" << num(f.height - 8.0)
      << "\" text-anchor=\"middle\">" << escape(c.x_label) << "</text>\n";
    o << "<text x=\"14\" y=\"" << num((y0 + y1) / 2.0) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << num((y0 + y1) / 2.0) << ")\">" << escape(c.y_label) << "</text>\n";

    if (c.bars) {
        const auto& b = *c.bars;
        const double slot = f.px(1.0) - f.px(0.0);
        const double base = f.py(std::max(f.y_min, 0.0));
        o << "<g fill=\"" << b.color << "\">\n";
        for (std::size_t i = 0; i < b.values.size(); ++i) {
            const double left = f.px(static_cast<double>(i)) + slot * 0.1;
            const double top = f.py(b.values[i]);
            o << "<rect x=\"" << num(left) << "\" y=\"" << num(std::min(top, base)) << "\" width=\""
              << num(slot * 0.8) << "\" height=\"" << num(std::abs(base - top)) << "\"/>\n";
        }
        o << "</g>\n<g fill=\"#333\">\n";
        for (std::size_t i = 0; i < b.categories.size() && b.categories.size() <= 60; ++i) {
            const double cx = f.px(static_cast<double>(i) + 0.5);
            o << "<text x=\"" << num(cx) << "\" y=\"" << num(y1 + 12) << "\" text-anchor=\"end\" "
              << "transform=\"rotate(-45 " << num(cx) << ' ' << num(y1 + 12) << ")\">"
              << escape(b.categories[i]) << "</text>\n";
        }
        o << "</g>\n";
    }
    for (const auto& s : c.lines) draw_line(o, s, f);
    for (const auto& s : c.scatters) draw_scatter(o, s, f);
    for (const auto& r : c.rules) {
        const double y = f.py(r.y);
        o << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x1) << "\" y2=\""
          << num(y) << "\" stroke=\"" << r.color << "\" stroke-dasharray=\"6 3\"/>\n";
    }

    // legend
    double ly = y0 + 12.0;
    auto legend = [&](const std::string& label, const std::string& color) {
        if (label.empty()) return;
        o << "<rect x=\"" << num(x1 - 150) << "\" y=\"" << num(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
          << color << "\"/>\n";
        o << "<text x=\"" << num(x1 - 135) << "\" y=\"" << num(ly + 1) << "\">" << escape(label)
          << "</text>\n";
        ly += 14.0;
    };
    for (const auto& s : c.lines) legend(s.label, s.color);
    for (const auto& s : c.scatters) legend(s.label, s.color);
    for (const auto& r : c.rules) legend(r.label, r.color);
    o << "</svg>\n";
    return o.str();
}

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorCode::parse, "missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string::npos ? pos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    return out;
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "missing artifact '" + path.string() + "'");
    Table t;
    std::string line;
    if (std::getline(in, line)) t.header = split_cells(line);
    while (std::getline(in, line)) {
        if (!line.empty()) t.rows.push_back(split_cells(line));
    }
    return t;
}

double to_double(const std::string& s) {
    if (s.empty()) return NAN;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc()) throw Error(ErrorCode::parse, "bad number '" + s + "' in artifact");
    return v;
}

void save(const std::filesystem::path& path, const std::string& svg) {
    write_file_atomic(path, [&](std::ostream& o) { o << svg; });
}

std::string file_safe(const std::string& id) {
    std::string out;
    for (const char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '_' || c == '-';
        out += ok ? c : '_';
    }
    return out;
}

}  // namespace

void render_figures(const std::filesystem::path& artifact_dir,
                    const std::filesystem::path& figure_dir) {
    const auto report = read_report(artifact_dir / "report.txt");
    std::map<std::string, std::string> units;
    if (const auto it = report.sections.find("signals"); it != report.sections.end()) {
        for (std::size_t r = 1; r < it->second.size(); ++r) {
            if (it->second[r].size() > 2) units[it->second[r][0]] = it->second[r][2];
        }
    }
    const auto stn = read_table(artifact_dir / "stn.csv");
    const auto pieces = read_table(artifact_dir / "pieces.csv");
    const auto mask = read_table(artifact_dir / "mask.csv");
    const auto explained = read_table(artifact_dir / "explained_variance.csv");
    const auto t2 = read_table(artifact_dir / "t2.csv");
    const auto map = read_table(artifact_dir / "outlier_map.csv");
    const auto labels = read_table(artifact_dir / "labels.csv");
    if (!std::filesystem::exists(artifact_dir / "cleaned.csv")) {
        throw Error(ErrorCode::io, "missing artifact '" + (artifact_dir / "cleaned.csv").string() + "'");
    }
    const auto cleaned = load_csv(artifact_dir / "cleaned.csv").dataset;
    std::filesystem::create_directories(figure_dir);

    {
        Chart c;
        c.title = "Signal-to-noise ratio per signal";
        c.x_label = "signal";
        c.y_label = "mean / standard deviation (dimensionless)";
        BarSeries b;
        const auto id = stn.column("signal_id");
        const auto v = stn.column("stn");
        for (const auto& row : stn.rows) {
            b.categories.push_back(row[id]);
            const double x = to_double(row[v]);
            b.values.push_back(std::isfinite(x) ? x : 0.0);
        }
        c.bars = std::move(b);
        save(figure_dir / "stn.svg", render_svg(c));
    }

    {
        const auto sid = mask.column("signal_id");
        const auto sidx = mask.column("index");
        const auto sraw = mask.column("raw_value");
        const auto pid = pieces.column("signal_id");
        const auto pstart = pieces.column("start");
        const auto pend = pieces.column("end");
        const auto pmean = pieces.column("mean");
        const auto plo = pieces.column("lower");
        const auto phi = pieces.column("upper");
        for (const auto& s : cleaned.signals()) {
            LineSeries raw;
            raw.color = "#7f7f7f";
            raw.label = "raw";
            raw.y = s.values;
            for (std::size_t i = 0; i < s.size(); ++i) {
                raw.x.push_back(static_cast<double>(i));
                if (s.is_missing(i)) raw.y[i] = NAN;
            }
            ScatterSeries flagged;
            flagged.label = "short-term outlier";
            for (const auto& row : mask.rows) {
                if (row[sid] != s.id) continue;
                const auto i = static_cast<std::size_t>(to_double(row[sidx]));
                const double v = to_double(row[sraw]);
                flagged.x.push_back(static_cast<double>(i));
                flagged.y.push_back(v);
                if (i < raw.y.size()) raw.y[i] = v;
            }
            LineSeries mean, lower, upper;
            mean.color = "#2ca02c";
            mean.label = "piece mean";
            mean.step = true;
            lower.color = upper.color = "#d62728";
            lower.dashed = upper.dashed = true;
            lower.step = upper.step = true;
            upper.label = "piece-wise 3 sigma";
            for (const auto& row : pieces.rows) {
                if (row[pid] != s.id) continue;
                const double a = to_double(row[pstart]);
                const double b = to_double(row[pend]);
                for (const double x : {a, b}) {
                    mean.x.push_back(x);
                    lower.x.push_back(x);
                    upper.x.push_back(x);
                    mean.y.push_back(to_double(row[pmean]));
                    lower.y.push_back(to_double(row[plo]));
                    upper.y.push_back(to_double(row[phi]));
                }
            }
            Chart c;
            c.title = "Signal " + s.id + " with piece-wise 3 sigma limits";
            c.x_label = "sample index";
            const auto unit = units.count(s.id) ? units[s.id] : s.unit;
            c.y_label = s.id + (unit.empty() ? std::string(" (unitless)") : " [" + unit + "]");
            c.lines = {std::move(raw), std::move(mean), std::move(lower), std::move(upper)};
            c.scatters = {std::move(flagged)};
            save(figure_dir / ("signal_" + file_safe(s.id) + ".svg"), render_svg(c));
        }
    }

    {
        Chart c;
        c.title = "Explained variance";
        c.x_label = "principal component";
        c.y_label = "fraction of total variance";
        c.y_min = 0.0;
        c.y_max = 1.0;
        BarSeries b;
        LineSeries cum;
        cum.color = "#ff7f0e";
        cum.label = "cumulative";
        const auto ratio = explained.column("ratio");
        const auto cumulative = explained.column("cumulative");
        for (std::size_t k = 0; k < explained.rows.size() && k < 30; ++k) {
            b.categories.push_back("PC" + std::to_string(k + 1));
            b.values.push_back(to_double(explained.rows[k][ratio]));
            cum.x.push_back(static_cast<double>(k) + 0.5);
            cum.y.push_back(to_double(explained.rows[k][cumulative]));
        }
        c.bars = std::move(b);
        c.lines = {std::move(cum)};
        save(figure_dir / "explained_variance.svg", render_svg(c));
    }

    {
        Chart c;
        c.title = "Hotelling T2";
        c.x_label = "sample index";
        c.y_label = "T2 (dimensionless)";
        LineSeries line;
        line.label = "T2";
        const auto idx = t2.column("index");
        const auto val = t2.column("t2");
        for (const auto& row : t2.rows) {
            line.x.push_back(to_double(row[idx]));
            line.y.push_back(to_double(row[val]));
        }
        c.lines = {std::move(line)};
        c.rules = {HorizontalRule{report.number("t2_threshold"), "#d62728", "T alpha"}};
        save(figure_dir / "t2.svg", render_svg(c));
    }

    {
        Chart c;
        c.title = "Outlier map";
        c.x_label = "PC1 score (standardized units)";
        c.y_label = "PC2 score (standardized units)";
        ScatterSeries normal, flagged;
        normal.color = "#1f77b4";
        normal.label = "T2 below limit";
        normal.radius = 1.5;
        flagged.label = "T2 above limit";
        flagged.radius = 1.5;
        const auto x = map.column("pc1");
        const auto y = map.column("pc2");
        const auto fl = map.column("flag");
        for (const auto& row : map.rows) {
            auto& dst = row[fl] == "1" ? flagged : normal;
            dst.x.push_back(to_double(row[x]));
            dst.y.push_back(to_double(row[y]));
        }
        c.scatters = {std::move(normal), std::move(flagged)};
        save(figure_dir / "outlier_map.svg", render_svg(c));
    }

    {
        Chart c;
        c.title = "DBSCAN clusters on the outlier map";
        c.x_label = "PC1 score (standardized units)";
        c.y_label = "PC2 score (standardized units)";
        const auto x = labels.column("pc1");
        const auto y = labels.column("pc2");
        const auto cl = labels.column("cluster_id");
        std::map<int, ScatterSeries> groups;
        for (const auto& row : labels.rows) {
            const int id = static_cast<int>(to_double(row[cl]));
            auto& g = groups[id];
            g.x.push_back(to_double(row[x]));
            g.y.push_back(to_double(row[y]));
        }
        for (auto& [id, g] : groups) {
            g.radius = 1.5;
            g.color = id == 0 ? "#000000" : kPalette[static_cast<std::size_t>(id - 1) % 10];
            g.label = id == 0 ? "noise" : "cluster " + std::to_string(id);
            if (id > 10) g.label.clear();
            c.scatters.push_back(std::move(g));
        }
        save(figure_dir / "clusters.svg", render_svg(c));
    }
}

}  // namespace plantclean
