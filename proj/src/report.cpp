#include "plantclean/report.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "plantclean/csv.hpp"
#include "plantclean/error.hpp"
#include "plantclean/pipeline.hpp"

namespace plantclean {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        cells.push_back(trim(line.substr(start, pos == std::string::npos ? pos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return cells;
}

}  // namespace

void write_report(const RunReport& r, std::ostream& o) {
    const auto& cp = r.changepoint;
    o << "# plantclean run report\n";
    o << "input = " << r.input << '\n';
    o << "n_samples = " << r.n_samples << '\n';
    o << "n_signals = " << r.n_signals << '\n';
    o << "gap_warnings = " << r.load.gap_warnings << '\n';
    o << "inserted_rows = " << r.load.inserted_rows << '\n';
    o << "block_size = " << cp.block_size << '\n';
    o << "min_piece_len = " << cp.min_piece_len << '\n';
    o << "min_score = " << format_value(cp.min_score) << '\n';
    o << "spread = " << to_string(r.spread) << '\n';
    std::size_t n_cps = 0;
    std::size_t n_outliers = 0;
    for (const auto& s : r.signals) {
        n_cps += s.change_points.size();
        n_outliers += s.clean.n_outliers;
    }
    o << "n_changepoints = " << n_cps << '\n';
    o << "n_short_term_outliers = " << n_outliers << '\n';
    o << "n_filled_missing = " << r.n_filled_missing << '\n';
    o << "excluded_columns = ";
    for (std::size_t k = 0; k < r.excluded_columns.size(); ++k) {
        o << (k ? ";" : "") << r.excluded_columns[k];
    }
    o << '\n';
    o << "n_components = " << r.n_components << '\n';
    o << "alpha = " << format_value(r.alpha) << '\n';
    o << "t2_threshold = " << format_value(r.t2_threshold) << '\n';
    o << "n_t2_flags = " << r.n_t2_flags << '\n';
    o << "n_periods = " << r.periods.size() << '\n';
    o << "epsilon = " << format_value(r.epsilon) << '\n';
    o << "epsilon_source = " << (r.epsilon_estimated ? "k-distance" : "fixed") << '\n';
    o << "min_pts = " << r.min_pts << '\n';
    o << "min_pts_source = " << (r.min_pts_heuristic ? "heuristic" : "fixed") << '\n';
    o << "n_clusters = " << r.n_clusters << '\n';
    o << "n_noise = " << r.n_noise << '\n';

    o << "\n[signals]\n";
    o << "signal_id,kind,unit,stn,n_changepoints,n_outliers,outlier_fraction,mad,residual_std,"
         "global_lower,global_upper,global_outliers\n";
    for (const auto& s : r.signals) {
        o << s.id << ',' << to_string(s.kind) << ',' << s.unit << ',' << format_value(s.stn) << ','
          << s.clean.n_changepoints << ',' << s.clean.n_outliers << ','
          << format_value(s.clean.outlier_fraction) << ',' << format_value(s.clean.mad) << ','
          << format_value(s.clean.residual_std) << ',' << format_value(s.global_bounds.lower)
          << ',' << format_value(s.global_bounds.upper) << ',' << s.global_outliers << '\n';
    }

    o << "\n[explained_variance]\ncomponent,eigenvalue,ratio,cumulative\n";
    double cum = 0.0;
    for (std::size_t k = 0; k < r.eigenvalues.size(); ++k) {
        cum += r.explained_ratio[k];
        o << k + 1 << ',' << format_value(r.eigenvalues[k]) << ','
          << format_value(r.explained_ratio[k]) << ',' << format_value(cum) << '\n';
    }

    o << "\n[periods]\nstart,end,n_points\n";
    for (const auto& p : r.periods) o << p.start << ',' << p.end << ',' << p.n_points << '\n';

    o << "\n[clusters]\ncluster_id,n_points,n_ranges,first_index,last_index\n";
    for (const auto& c : r.clusters) {
        o << c.id << ',' << c.n_points << ',' << c.ranges.size() << ',';
        if (c.ranges.empty()) {
            o << ",\n";
        } else {
            o << c.ranges.front().start << ',' << c.ranges.back().end - 1 << '\n';
        }
    }

    o << "\n[warnings]\nmessage\n";
    for (const auto& w : r.warnings) o << w << '\n';
}

std::optional<std::string> ReportDocument::value(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
}

double ReportDocument::number(const std::string& key) const {
    const auto v = value(key);
    if (!v) throw Error(ErrorCode::parse, "report has no '" + key + "' entry");
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) {
        throw Error(ErrorCode::parse, "report entry '" + key + "' is not a number: " + *v);
    }
    return out;
}

ReportDocument parse_report(std::istream& in) {
    ReportDocument doc;
    std::string line;
    std::string section;
    while (std::getline(in, line)) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            doc.sections[section];
            continue;
        }
        if (section.empty()) {
            const auto eq = t.find('=');
            if (eq == std::string::npos) throw Error(ErrorCode::parse, "report line without '=': " + t);
            doc.values[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
        } else {
            doc.sections[section].push_back(split_row(t));
        }
    }
    return doc;
}

ReportDocument read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot read report '" + path.string() + "'");
    return parse_report(in);
}

}  // namespace plantclean
