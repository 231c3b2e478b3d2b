#include "plantclean/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "plantclean/error.hpp"

namespace plantclean {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return cells;
}

[[noreturn]] void parse_fail(std::string_view source, std::size_t line, const std::string& msg) {
    throw Error(ErrorCode::parse,
                std::string(source) + ":" + std::to_string(line) + ": " + msg);
}

bool is_missing_token(std::string_view s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null";
}

std::optional<double> parse_number(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<long long> parse_index(std::string_view s) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

// YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|+00:00]
std::optional<std::chrono::sys_seconds> parse_iso(std::string_view s) {
    using namespace std::chrono;
    if (s.size() < 16) return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
        if (ec != std::errc() || ptr != s.data() + pos + len) return std::nullopt;
        return v;
    };
    if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') {
        return std::nullopt;
    }
    const auto y = num(0, 4), mo = num(5, 2), d = num(8, 2), h = num(11, 2), mi = num(14, 2);
    if (!y || !mo || !d || !h || !mi) return std::nullopt;
    int sec = 0;
    std::size_t pos = 16;
    if (pos < s.size() && s[pos] == ':') {
        const auto ss = num(pos + 1, 2);
        if (!ss) return std::nullopt;
        sec = *ss;
        pos += 3;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        }
    }
    const auto tail = s.substr(pos);
    if (!(tail.empty() || tail == "Z" || tail == "+00:00" || tail == "+0000")) return std::nullopt;
    const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)},
                             day{static_cast<unsigned>(*d)}};
    if (!ymd.ok() || *h > 23 || *mi > 59 || sec > 60) return std::nullopt;
    return sys_days{ymd} + hours{*h} + minutes{*mi} + seconds{sec};
}

}  // namespace

LoadResult parse_csv(std::istream& in, const CsvSchema& schema, std::string_view source) {
    std::string line;
    std::size_t line_no = 0;
    // header (skip leading blank lines)
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) parse_fail(source, line_no, "missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    const auto header = split(line);
    if (header.size() < 2) parse_fail(source, line_no, "header needs a timestamp and at least one signal");
    const std::size_t m = header.size() - 1;

    // map file column -> output signal slot
    std::vector<std::size_t> slot(m);
    std::vector<std::string> ids;
    if (schema.signal_ids.empty()) {
        for (std::size_t c = 0; c < m; ++c) {
            ids.emplace_back(header[c + 1]);
            slot[c] = c;
        }
    } else {
        ids = schema.signal_ids;
        if (ids.size() != m) {
            throw Error(ErrorCode::validation, std::string(source) + ": header has " +
                                                   std::to_string(m) + " signals, schema expects " +
                                                   std::to_string(ids.size()));
        }
        std::unordered_map<std::string_view, std::size_t> wanted;
        for (std::size_t j = 0; j < ids.size(); ++j) wanted.emplace(ids[j], j);
        for (std::size_t c = 0; c < m; ++c) {
            const auto it = wanted.find(header[c + 1]);
            if (it == wanted.end()) {
                throw Error(ErrorCode::validation, std::string(source) + ": unexpected column '" +
                                                       std::string(header[c + 1]) + "'");
            }
            slot[c] = it->second;
        }
    }

    std::vector<Signal> signals(m);
    for (std::size_t j = 0; j < m; ++j) {
        signals[j].id = ids[j];
        signals[j].kind = infer_kind(ids[j]);
        signals[j].unit = std::string(default_unit(signals[j].kind));
    }
    std::vector<Timestamp> timestamps;
    LoadReport report;

    enum class Mode { unknown, index, wall } mode = Mode::unknown;
    long long prev_index = 0;
    std::chrono::sys_seconds prev_time{};
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto push_missing_row = [&](std::optional<std::chrono::sys_seconds> wall) {
        timestamps.push_back(Timestamp{timestamps.size(), wall});
        for (auto& s : signals) {
            s.values.push_back(nan);
            s.missing.push_back(1);
        }
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != m + 1) {
            parse_fail(source, line_no, "expected " + std::to_string(m + 1) + " cells, found " +
                                            std::to_string(cells.size()));
        }

        std::optional<std::chrono::sys_seconds> wall;
        std::size_t gap_rows = 0;
        if (const auto idx = parse_index(cells[0]); idx && mode != Mode::wall) {
            if (mode == Mode::index) {
                const long long delta = *idx - prev_index;
                if (delta == 0) {
                    throw Error(ErrorCode::validation, std::string(source) + ":" +
                                                           std::to_string(line_no) +
                                                           ": duplicate timestamp " +
                                                           std::string(cells[0]));
                }
                if (delta < 0) {
                    throw Error(ErrorCode::validation, std::string(source) + ":" +
                                                           std::to_string(line_no) +
                                                           ": timestamps are not increasing");
                }
                gap_rows = static_cast<std::size_t>(delta - 1);
            }
            mode = Mode::index;
            prev_index = *idx;
        } else if (const auto t = parse_iso(cells[0]); t && mode != Mode::index) {
            if (mode == Mode::wall) {
                const auto delta = (*t - prev_time).count();
                if (delta < 0) {
                    throw Error(ErrorCode::validation, std::string(source) + ":" +
                                                           std::to_string(line_no) +
                                                           ": timestamps are not increasing");
                }
                const auto steps = static_cast<long long>(std::llround(static_cast<double>(delta) / 60.0));
                if (delta % 60 != 0) ++report.snapped_steps;
                if (steps == 0) {
                    throw Error(ErrorCode::validation, std::string(source) + ":" +
                                                           std::to_string(line_no) +
                                                           ": duplicate timestamp " +
                                                           std::string(cells[0]));
                }
                gap_rows = static_cast<std::size_t>(steps - 1);
                for (std::size_t k = 1; k <= gap_rows; ++k) {
                    push_missing_row(prev_time + std::chrono::minutes(k));
                }
                prev_time += std::chrono::minutes(steps);
            } else {
                prev_time = *t;
            }
            mode = Mode::wall;
            wall = prev_time;
        } else {
            parse_fail(source, line_no, "unparseable timestamp '" + std::string(cells[0]) + "'");
        }

        if (mode == Mode::index) {
            for (std::size_t k = 0; k < gap_rows; ++k) push_missing_row(std::nullopt);
        }
        if (gap_rows > 0) {
            ++report.gap_warnings;
            report.inserted_rows += gap_rows;
        }

        timestamps.push_back(Timestamp{timestamps.size(), wall});
        for (std::size_t c = 0; c < m; ++c) {
            auto& s = signals[slot[c]];
            const auto cell = cells[c + 1];
            if (is_missing_token(cell)) {
                s.values.push_back(nan);
                s.missing.push_back(1);
                continue;
            }
            const auto v = parse_number(cell);
            if (!v) parse_fail(source, line_no, "bad number '" + std::string(cell) + "'");
            if (!std::isfinite(*v)) {
                s.values.push_back(nan);
                s.missing.push_back(1);
            } else {
                s.values.push_back(*v);
                s.missing.push_back(0);
            }
        }
    }
    return LoadResult{Dataset(std::move(timestamps), std::move(signals)), report};
}

LoadResult load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
    return parse_csv(in, schema, path.string());
}

std::string format_value(double value) {
    char buf[64];
    const auto [ptr, ec] =
        std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 15);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

void write_csv(const Dataset& dataset, std::ostream& out) {
    out << "timestamp";
    for (const auto& s : dataset.signals()) out << ',' << s.id;
    out << '\n';
    const auto& ts = dataset.timestamps();
    std::string row;
    for (std::size_t i = 0; i < dataset.n_samples(); ++i) {
        row = ts[i].to_string();
        for (const auto& s : dataset.signals()) {
            row += ',';
            if (!s.is_missing(i)) row += format_value(s.values[i]);
        }
        row += '\n';
        out << row;
    }
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, "cannot write '" + tmp.string() + "'");
        try {
            writer(out);
        } catch (...) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw;
        }
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw Error(ErrorCode::io, "write failed for '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::io, "cannot rename into '" + path.string() + "'");
    }
}

}  // namespace plantclean
