#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace plantclean {

struct RunReport;

/// Text report layout: `key = value` lines, then `[section]` blocks whose
/// first line is a comma-separated header followed by rows.
void write_report(const RunReport& report, std::ostream& out);

/// Parsed form of a report (or any file in that layout).
struct ReportDocument {
    std::map<std::string, std::string> values;
    /// section name -> rows, header row first
    std::map<std::string, std::vector<std::vector<std::string>>> sections;

    std::optional<std::string> value(const std::string& key) const;
    /// Throws `Error(parse)` when the key is absent or not a number.
    double number(const std::string& key) const;
};

ReportDocument parse_report(std::istream& in);
/// Throws `Error(io)` when the file cannot be read.
ReportDocument read_report(const std::filesystem::path& path);

}  // namespace plantclean
