#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "plantclean/series.hpp"

namespace plantclean {

/// Column contract for `load_csv`. An empty id list means "infer from the
/// header"; otherwise the header must carry exactly these ids (any order) and
/// signals come back in this order.
struct CsvSchema {
    std::vector<std::string> signal_ids;

    static CsvSchema infer() { return {}; }
};

struct LoadReport {
    /// Number of cadence gaps that were filled with missing rows.
    std::size_t gap_warnings = 0;
    std::size_t inserted_rows = 0;
    /// Wall-clock steps that were not a whole number of minutes.
    std::size_t snapped_steps = 0;
};

struct LoadResult {
    Dataset dataset;
    LoadReport report;
};

/// Read a `timestamp,<id1>,<id2>,...` file. Timestamps are either plain
/// integer indices or ISO-8601 UTC datetimes at a one-minute cadence. Empty,
/// `NA` and `NaN` cells are missing; skipped indices/minutes are inserted as
/// all-missing rows.
LoadResult load_csv(const std::filesystem::path& path,
                    const CsvSchema& schema = CsvSchema::infer());
LoadResult parse_csv(std::istream& in, const CsvSchema& schema = CsvSchema::infer(),
                     std::string_view source = "<stream>");

/// Shortest-safe text form used by every CSV writer: 15 significant digits.
std::string format_value(double value);

void write_csv(const Dataset& dataset, std::ostream& out);

/// Write `path` through a sibling temporary file and rename it into place, so
/// readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);

}  // namespace plantclean
