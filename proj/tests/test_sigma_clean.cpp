#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "plantclean/changepoint.hpp"
#include "plantclean/error.hpp"
#include "plantclean/random.hpp"
#include "plantclean/sigma_clean.hpp"

using namespace plantclean;
using Catch::Approx;

namespace {

std::vector<double> gauss(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
    auto rng = Rng::stream(seed, 3);
    std::vector<double> v(n);
    for (auto& x : v) x = sigma * rng.normal();
    return v;
}

// Recompute the whole-series band from scratch and flag strictly outside.
Mask reference_flags(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    Mask m(v.size(), 0);
    for (std::size_t i = 0; i < v.size(); ++i) m[i] = std::abs(v[i] - mean) > 3.0 * sd;
    return m;
}

std::vector<Piece> whole(const Signal& s) { return pieces_from_changepoints({}, s); }

}  // namespace

TEST_CASE("global bounds reproduce the reported temperature band", "[sigma]") {
    // two values give sample mean 402 and sample std 33.67 exactly
    const double h = 33.67 / std::sqrt(2.0);
    const auto r = global_3sigma(Signal::from_values("T0", {402.0 - h, 402.0 + h}));
    CHECK(r.bounds.lower == Approx(301.0).margin(0.01));
    CHECK(r.bounds.upper == Approx(503.0).margin(0.01));
}

TEST_CASE("global constant series has a point band and no flags", "[sigma]") {
    const auto r = global_3sigma(Signal::from_values("C", std::vector<double>(50, 7.0)));
    CHECK(r.bounds.lower == 7.0);
    CHECK(r.bounds.upper == 7.0);
    CHECK(r.mask.count() == 0);
}

TEST_CASE("global flags exactly the planted value", "[sigma]") {
    auto v = gauss(100, 1);
    v.push_back(10.0);
    const auto r = global_3sigma(Signal::from_values("X", v));
    CHECK(r.mask.flags == reference_flags(v));
    CHECK(r.mask.count() == 1);
    CHECK(r.mask[100]);
}

TEST_CASE("global errors on too little data", "[sigma]") {
    Signal s = Signal::from_values("X", {1.0, 2.0});
    s.missing = {1, 1};
    CHECK_THROWS_AS(global_3sigma(s), Error);
    s.missing = {0, 1};
    CHECK_THROWS_AS(global_3sigma(s), Error);
}

TEST_CASE("pieces without change points cover the series", "[sigma]") {
    const auto s = Signal::from_values("X", gauss(30, 2));
    const auto p = whole(s);
    REQUIRE(p.size() == 1);
    CHECK(p[0].start == 0);
    CHECK(p[0].end == 30);
}

TEST_CASE("pieces of the step series have means 0 and 1", "[sigma]") {
    const auto s = Signal::from_values("X", {0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    const std::vector<std::size_t> cps{5};
    const auto p = pieces_from_changepoints(cps, s);
    REQUIRE(p.size() == 2);
    CHECK(p[0].stats.mean() == 0.0);
    CHECK(p[1].stats.mean() == 1.0);
}

TEST_CASE("piece means equal slice means", "[sigma][property]") {
    auto rng = Rng::stream(8, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto v = gauss(500, static_cast<std::uint64_t>(trial), 3.0);
        std::vector<std::size_t> cuts;
        for (int k = 0; k < 6; ++k) cuts.push_back(1 + static_cast<std::size_t>(rng.uniform() * 498));
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        const auto pieces = pieces_from_changepoints(cuts, v.size(), v);
        REQUIRE(pieces.size() == cuts.size() + 1);
        for (const auto& p : pieces) {
            const double m = std::accumulate(v.begin() + static_cast<long>(p.start),
                                             v.begin() + static_cast<long>(p.end), 0.0) /
                             static_cast<double>(p.length());
            CHECK(p.stats.mean() == Approx(m).epsilon(1e-12).margin(1e-12));
        }
    }
}

TEST_CASE("bad change points are rejected", "[sigma]") {
    const std::vector<double> v(10, 0.0);
    const std::vector<std::size_t> unsorted{5, 3};
    const std::vector<std::size_t> edge{0};
    const std::vector<std::size_t> past{10};
    CHECK_THROWS_AS(pieces_from_changepoints(unsorted, 10, v), Error);
    CHECK_THROWS_AS(pieces_from_changepoints(edge, 10, v), Error);
    CHECK_THROWS_AS(pieces_from_changepoints(past, 10, v), Error);
}

TEST_CASE("60 zeros and a spike of 100", "[sigma]") {
    std::vector<double> v(60, 0.0);
    v.push_back(100.0);
    const auto s = Signal::from_values("X", v);
    const auto pieces = whole(s);
    const auto mask = piecewise_3sigma(s, pieces);
    CHECK(mask.count() == 1);
    CHECK(mask[60]);

    // the spike sits (100 - 100/61) / sd piece-sigmas from the mean
    const double mean = 100.0 / 61.0;
    const double sd = std::sqrt((60.0 * mean * mean + (100.0 - mean) * (100.0 - mean)) / 60.0);
    CHECK((100.0 - mean) / sd == Approx(7.68).margin(0.01));

    const auto out = impute_piecewise_mean(s, pieces, mask);
    CHECK(out.values[60] == Approx(100.0 / 61.0).epsilon(1e-12));
    for (std::size_t i = 0; i < 60; ++i) CHECK(out.values[i] == 0.0);
}

TEST_CASE("constant pieces never flag", "[sigma]") {
    std::vector<double> v(40, 2.0);
    v.insert(v.end(), 40, -9.0);
    const auto s = Signal::from_values("X", v);
    const std::vector<std::size_t> cps{40};
    CHECK(piecewise_3sigma(s, pieces_from_changepoints(cps, s)).count() == 0);
}

TEST_CASE("trivial partition matches the whole-series test", "[sigma][property]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto v = gauss(300, seed);
        v[17] = 6.0;
        v[200] = -4.5;
        const auto s = Signal::from_values("X", v);
        for (auto spread : {Spread::std_dev, Spread::scaled_mad}) {
            CHECK(piecewise_3sigma(s, whole(s), spread) == global_3sigma(s, spread).mask);
        }
    }
}

TEST_CASE("empty mask leaves the signal untouched", "[sigma]") {
    const auto s = Signal::from_values("X", gauss(50, 3));
    const auto pieces = whole(s);
    const OutlierMask none{Mask(50, 0)};
    CHECK(impute_piecewise_mean(s, pieces, none).values == s.values);
}

TEST_CASE("imputation is idempotent for a fixed mask", "[sigma][property]") {
    auto v = gauss(400, 9);
    for (std::size_t i = 5; i < 400; i += 50) v[i] = 9.0;
    const auto s = Signal::from_values("X", v);
    const std::vector<std::size_t> cps{150, 275};
    const auto pieces = pieces_from_changepoints(cps, s);
    const auto mask = piecewise_3sigma(s, pieces);
    const auto once = impute_piecewise_mean(s, pieces, mask);
    const auto twice = impute_piecewise_mean(once, pieces, mask);
    CHECK(once.values == twice.values);
}

TEST_CASE("fully flagged piece takes its mean everywhere", "[sigma]") {
    const auto s = Signal::from_values("X", {1, 2, 3, 10, 20, 30});
    const std::vector<std::size_t> cps{3};
    const auto pieces = pieces_from_changepoints(cps, s);
    const OutlierMask mask{Mask{0, 0, 0, 1, 1, 1}};
    const auto out = impute_piecewise_mean(s, pieces, mask);
    CHECK(out.values == std::vector<double>{1, 2, 3, 20, 20, 20});
}

TEST_CASE("flags grow with distance from the piece mean", "[sigma][property]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto v = gauss(600, seed + 40);
        for (std::size_t i = 3; i < 600; i += 71) v[i] *= 5.0;
        const auto s = Signal::from_values("X", v);
        const std::vector<std::size_t> cps{250};
        const auto pieces = pieces_from_changepoints(cps, s);
        const auto mask = piecewise_3sigma(s, pieces);
        for (const auto& p : pieces) {
            double smallest_flagged = INFINITY;
            double largest_kept = 0.0;
            for (std::size_t i = p.start; i < p.end; ++i) {
                const double d = std::abs(v[i] - p.stats.mean());
                if (mask[i]) {
                    smallest_flagged = std::min(smallest_flagged, d);
                } else {
                    largest_kept = std::max(largest_kept, d);
                }
            }
            CHECK(largest_kept < smallest_flagged);
        }
    }
}

TEST_CASE("diagnostics on constant and exact step series", "[sigma]") {
    const auto c = Signal::from_values("C", std::vector<double>(100, 4.0));
    const auto pc = whole(c);
    const auto rc = clean_diagnostics(c, pc, piecewise_3sigma(c, pc));
    CHECK(rc.mad == 0.0);
    CHECK(rc.residual_std == 0.0);

    const auto s = Signal::from_values("S", {0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    const std::vector<std::size_t> cps{5};
    const auto ps = pieces_from_changepoints(cps, s);
    const auto rs = clean_diagnostics(s, ps, piecewise_3sigma(s, ps));
    CHECK(rs.mad == 0.0);
    CHECK(rs.n_changepoints == 1);
}

TEST_CASE("mean absolute residual of unit noise", "[sigma]") {
    auto v = gauss(10000, 77);
    for (std::size_t i = 4000; i < 10000; ++i) v[i] += 6.0;
    const auto s = Signal::from_values("X", v);
    const std::vector<std::size_t> cps{4000};
    const auto pieces = pieces_from_changepoints(cps, s);
    const auto r = clean_diagnostics(s, pieces, piecewise_3sigma(s, pieces));
    CHECK(r.mad == Approx(std::sqrt(2.0 / M_PI)).margin(0.05));
}

TEST_CASE("outlier fraction counts present values only", "[sigma][property]") {
    auto v = gauss(1000, 5);
    for (std::size_t i = 0; i < 1000; i += 97) v[i] = 8.0;
    Signal s = Signal::from_values("X", v);
    for (std::size_t i = 1; i < 1000; i += 13) {
        s.missing[i] = 1;
        s.values[i] = NAN;
    }
    const auto pieces = whole(s);
    const auto mask = piecewise_3sigma(s, pieces);
    const auto r = clean_diagnostics(s, pieces, mask);
    CHECK(r.n_outliers == mask.count());
    CHECK(r.outlier_fraction == static_cast<double>(r.n_outliers) / static_cast<double>(s.count_present()));
    for (std::size_t i = 0; i < 1000; ++i) {
        if (s.is_missing(i)) CHECK_FALSE(mask[i]);
    }
}

TEST_CASE("scaled MAD ignores a gross error", "[sigma]") {
    auto v = gauss(200, 6);
    for (std::size_t i = 0; i < 20; ++i) v[i] = 1e4;
    const auto s = Signal::from_values("X", v);
    CHECK(global_3sigma(s, Spread::std_dev).mask.count() == 0);
    CHECK(global_3sigma(s, Spread::scaled_mad).mask.count() >= 20);
    CHECK(parse_spread("mad") == Spread::scaled_mad);
    CHECK_THROWS_AS(parse_spread("iqr"), Error);
}

TEST_CASE("pieces must partition the signal", "[sigma]") {
    const auto s = Signal::from_values("X", gauss(20, 1));
    auto pieces = whole(s);
    pieces[0].end = 19;
    CHECK_THROWS_AS(piecewise_3sigma(s, pieces), Error);
}

TEST_CASE("detected pieces clean a stepped series", "[sigma]") {
    auto v = gauss(2000, 12);
    for (std::size_t i = 800; i < 2000; ++i) v[i] += 8.0;
    v[300] += 7.0;
    v[1500] -= 7.0;
    const auto s = Signal::from_values("X", v);
    std::vector<std::size_t> idx;
    for (const auto& cp : detect_online(v, ChangePointConfig{})) idx.push_back(cp.index);
    const auto pieces = pieces_from_changepoints(idx, s);
    const auto mask = piecewise_3sigma(s, pieces);
    CHECK(mask[300]);
    CHECK(mask[1500]);
    CHECK_FALSE(global_3sigma(s).mask[300]);
}
