#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "plantclean/error.hpp"
#include "plantclean/random.hpp"
#include "plantclean/segment_stats.hpp"
#include "plantclean/series.hpp"

using namespace plantclean;
using Catch::Approx;

namespace {

// two-point signal whose sample mean and std are exactly (mean, sd)
Signal signal_with(double mean, double sd) {
    const double h = sd / std::sqrt(2.0);
    return Signal::from_values("X", {mean - h, mean + h});
}

double naive_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double naive_var(const std::vector<double>& v) {
    const double m = naive_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("stn ratio of a gross-error flow signal is near zero", "[series]") {
    CHECK(stn_ratio(signal_with(184.0, 14481.0)) == Approx(0.0127).margin(5e-5));
}

TEST_CASE("stn ratio of a healthy temperature signal", "[series]") {
    CHECK(stn_ratio(signal_with(402.0, 33.5)) == Approx(12.0).margin(0.01));
}

TEST_CASE("stn ratio sentinels for zero deviation", "[series]") {
    CHECK(std::isinf(stn_ratio(Signal::from_values("C", std::vector<double>(20, 3.0)))));
    CHECK(stn_ratio(Signal::from_values("Z", std::vector<double>(20, 0.0))) == 0.0);
}

TEST_CASE("stn ratio is permutation invariant", "[series][property]") {
    auto rng = Rng::stream(11, 0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(200);
        for (auto& x : v) x = 5.0 + 2.0 * rng.normal();
        auto w = v;
        std::reverse(w.begin(), w.end());
        std::rotate(w.begin(), w.begin() + 37, w.end());
        const double a = stn_ratio(Signal::from_values("A", v));
        const double b = stn_ratio(Signal::from_values("A", w));
        CHECK(b == Approx(a).epsilon(1e-12));
    }
}

TEST_CASE("stn ratio skips missing values", "[series]") {
    Signal s = Signal::from_values("X", {1.0, 1000.0, 3.0});
    s.missing[1] = 1;
    CHECK(stn_ratio(s) == Approx(2.0 / std::sqrt(2.0)));
    s.missing = {1, 1, 0};
    CHECK_THROWS_AS(stn_ratio(s), Error);
}

TEST_CASE("incremental segment stats match a two-pass computation", "[series][property]") {
    auto rng = Rng::stream(5, 1);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 500);
        std::vector<double> v(n);
        const double offset = rng.uniform(-1e6, 1e6);
        for (auto& x : v) x = offset + rng.normal();
        SegmentStats inc;
        for (double x : v) inc.add(x);
        CHECK(inc.mean() == Approx(naive_mean(v)).epsilon(1e-10));
        CHECK(inc.variance() == Approx(naive_var(v)).epsilon(1e-10));

        // merging two halves gives the same answer as one pass
        const std::size_t cut = n / 3;
        auto left = SegmentStats::batch(std::span(v).first(cut));
        left.merge(SegmentStats::batch(std::span(v).subspan(cut)));
        CHECK(left.count() == n);
        CHECK(left.mean() == Approx(naive_mean(v)).epsilon(1e-10));
        CHECK(left.variance() == Approx(naive_var(v)).epsilon(1e-10));
    }
}

TEST_CASE("dataset validates its shape", "[series]") {
    auto a = Signal::from_values("A", {1, 2, 3});
    auto b = Signal::from_values("B", {1, 2});
    CHECK_THROWS_AS(Dataset::from_signals({a, b}), Error);
    CHECK_THROWS_AS(Dataset::from_signals({a, a}), Error);
    CHECK_THROWS_AS(Dataset::from_signals({}), Error);
    CHECK_THROWS_AS(Dataset::from_signals({Signal::from_values("A", {1.0})}), Error);

    const auto d = Dataset::from_signals({a, Signal::from_values("B", {4, 5, 6})});
    CHECK(d.n_samples() == 3);
    CHECK(d.n_signals() == 2);
    CHECK(d.find("B") == 1u);
    CHECK_FALSE(d.find("C"));
    CHECK_FALSE(d.has_missing());
}

TEST_CASE("signal kind comes from the tag prefix", "[series]") {
    CHECK(infer_kind("T0") == SignalKind::temperature);
    CHECK(infer_kind("P12") == SignalKind::pressure);
    CHECK(infer_kind("F72") == SignalKind::flow_rate);
    CHECK(infer_kind("level") == SignalKind::unknown);
}
