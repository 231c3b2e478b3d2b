#include "catch_amalgamated.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "plantclean/csv.hpp"
#include "plantclean/error.hpp"
#include "plantclean/random.hpp"

using namespace plantclean;

namespace {

LoadResult parse(const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in);
}

ErrorCode code_of(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::io;
}

// Independent reader for minute-cadence files: minute of day -> row.
struct ReferenceRows {
    std::map<int, std::vector<std::string>> rows;
    int first = 0;
    int last = 0;
};

ReferenceRows reference_read(const std::string& text) {
    ReferenceRows ref;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    bool first = true;
    while (std::getline(in, line)) {
        int y, mo, d, h, mi;
        std::sscanf(line.c_str(), "%d-%d-%dT%d:%d", &y, &mo, &d, &h, &mi);
        const int minute = h * 60 + mi;
        std::vector<std::string> cells;
        std::stringstream ss(line.substr(line.find(',') + 1));
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        ref.rows[minute] = cells;
        if (first) ref.first = minute;
        first = false;
        ref.last = minute;
    }
    return ref;
}

}  // namespace

TEST_CASE("three rows, two sensors, no gaps", "[csv]") {
    const auto r = parse("timestamp,T1,P2\n0,1.5,2\n1,1.25,3\n2,1,4\n");
    const auto& d = r.dataset;
    CHECK(d.n_samples() == 3);
    CHECK(d.n_signals() == 2);
    CHECK_FALSE(d.has_missing());
    CHECK(d.signal(0).values == std::vector<double>{1.5, 1.25, 1.0});
    CHECK(d.signal(1).values == std::vector<double>{2, 3, 4});
    CHECK(d.signal(0).kind == SignalKind::temperature);
    CHECK(r.report.gap_warnings == 0);
}

TEST_CASE("an empty cell is flagged missing", "[csv]") {
    const auto d = parse("timestamp,A,B\n0,1,2\n1,,3\n2,5,NA\n").dataset;
    CHECK(d.signal(0).missing == Mask{0, 1, 0});
    CHECK(d.signal(1).missing == Mask{0, 0, 1});
    CHECK(d.signal(0).values[0] == 1.0);
    CHECK(d.signal(0).values[2] == 5.0);
    CHECK(d.signal(1).values[1] == 3.0);
}

TEST_CASE("a skipped minute becomes an inserted missing row", "[csv]") {
    const std::string text =
        "timestamp,A,B\n"
        "2024-01-01T00:00:00Z,1,2\n"
        "2024-01-01T00:01:00Z,3,4\n"
        "2024-01-01T00:03:00Z,5,6\n"
        "2024-01-01T00:04:00Z,7,8\n";
    const auto r = parse(text);
    const auto ref = reference_read(text);
    CHECK(r.report.gap_warnings == 1);
    CHECK(r.report.inserted_rows == 1);
    REQUIRE(r.dataset.n_samples() == static_cast<std::size_t>(ref.last - ref.first + 1));
    for (int minute = ref.first; minute <= ref.last; ++minute) {
        const auto i = static_cast<std::size_t>(minute - ref.first);
        const auto it = ref.rows.find(minute);
        for (std::size_t j = 0; j < 2; ++j) {
            const auto& s = r.dataset.signal(j);
            if (it == ref.rows.end()) {
                CHECK(s.is_missing(i));
            } else {
                CHECK_FALSE(s.is_missing(i));
                CHECK(s.values[i] == std::stod(it->second[j]));
            }
        }
    }
    CHECK(r.dataset.timestamps()[2].to_string() == "2024-01-01T00:02:00Z");
}

TEST_CASE("integer index gaps are filled too", "[csv]") {
    const auto r = parse("t,A\n0,1\n1,2\n4,3\n");
    CHECK(r.dataset.n_samples() == 5);
    CHECK(r.report.inserted_rows == 2);
    CHECK(r.dataset.signal(0).missing == Mask{0, 0, 1, 1, 0});
}

TEST_CASE("malformed input maps to the right error kind", "[csv]") {
    CHECK(code_of("") == ErrorCode::parse);
    CHECK(code_of("t,A\n0,1,2\n1,3\n") == ErrorCode::parse);
    CHECK(code_of("t,A\n0,abc\n1,2\n") == ErrorCode::parse);
    CHECK(code_of("t,A\nnoon,1\n1,2\n") == ErrorCode::parse);
    CHECK(code_of("t,A\n1,1\n0,2\n") == ErrorCode::validation);
    CHECK(code_of("t,A\n0,1\n0,2\n") == ErrorCode::validation);
    CHECK(code_of("t,A,A\n0,1,1\n1,2,2\n") == ErrorCode::validation);
}

TEST_CASE("schema reorders columns and rejects strangers", "[csv]") {
    std::istringstream in("t,B,A\n0,1,2\n1,3,4\n");
    const auto d = parse_csv(in, CsvSchema{{"A", "B"}}).dataset;
    CHECK(d.signal(0).id == "A");
    CHECK(d.signal(0).values == std::vector<double>{2, 4});
    std::istringstream bad("t,B,C\n0,1,2\n1,3,4\n");
    CHECK_THROWS_AS(parse_csv(bad, CsvSchema{{"A", "B"}}), Error);
}

TEST_CASE("writer round-trips present values exactly", "[csv][property]") {
    auto rng = Rng::stream(3, 0);
    std::vector<Signal> sigs;
    for (int j = 0; j < 4; ++j) {
        std::vector<double> v(300);
        for (auto& x : v) x = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
        // 15 significant digits is the text contract
        for (auto& x : v) x = std::stod(format_value(x));
        sigs.push_back(Signal::from_values("S" + std::to_string(j), v));
    }
    sigs[1].missing[7] = 1;
    sigs[1].values[7] = std::nan("");
    const auto d = Dataset::from_signals(sigs);
    std::ostringstream out;
    write_csv(d, out);
    const auto back = parse(out.str()).dataset;
    REQUIRE(back.n_samples() == d.n_samples());
    for (std::size_t j = 0; j < d.n_signals(); ++j) {
        CHECK(back.signal(j).missing == d.signal(j).missing);
        for (std::size_t i = 0; i < d.n_samples(); ++i) {
            if (!d.signal(j).is_missing(i)) CHECK(back.signal(j).values[i] == d.signal(j).values[i]);
        }
    }
}

TEST_CASE("atomic write leaves no temporary behind", "[csv]") {
    const auto dir = std::filesystem::temp_directory_path() / "plantclean_csv_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "a.csv", [](std::ostream& o) { o << "x\n"; });
    CHECK_THROWS(write_file_atomic(dir / "b.csv", [](std::ostream& o) {
        o << "partial";
        throw Error(ErrorCode::numeric, "boom");
    }));
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        names.push_back(e.path().filename().string());
    }
    CHECK(names == std::vector<std::string>{"a.csv"});
    std::filesystem::remove_all(dir);
}

TEST_CASE("missing file is an io error", "[csv]") {
    try {
        load_csv("/nonexistent/plantclean.csv");
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::io);
    }
}
