#include "plantclean/fdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "plantclean/error.hpp"

namespace plantclean {

namespace {

constexpr int kMaxIterations = 1000000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// Stirling remainder of ln Gamma(x) beyond (x - 1/2) ln x - x + ln(2 pi)/2.
double stirling_tail(double x) {
    const double r = 1.0 / x;
    const double r2 = r * r;
    return r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 / 1260.0));
}

// ln Gamma(b) - ln Gamma(b + a) for large b without subtracting two huge values.
double lgamma_ratio(double b, double a) {
    return -a * std::log(b) - (b + a - 0.5) * std::log1p(a / b) + a + stirling_tail(b) -
           stirling_tail(b + a);
}

double ln_beta(double a, double b) {
    const double big = std::max(a, b);
    const double small = std::min(a, b);
    if (big >= 1000.0) return std::lgamma(small) + lgamma_ratio(big, small);
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_cf(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double dm = m;
        const double m2 = 2.0 * dm;
        double aa = dm * (b - dm) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + dm) * (qab + dm) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) <= kEps) return h;
    }
    throw Error(ErrorCode::numeric, "incomplete beta continued fraction did not converge (a=" +
                                        std::to_string(a) + ", b=" + std::to_string(b) +
                                        ", x=" + std::to_string(x) + ")");
}

// I_x(a, b) and its complement given ln x and ln(1 - x) separately, so that
// x close to 0 or 1 keeps full precision.
struct BetaPair {
    double lower;  // I_x(a, b)
    double upper;  // 1 - I_x(a, b)
};

BetaPair incomplete_beta_pair(double a, double b, double x, double y, double ln_x, double ln_y) {
    if (x <= 0.0) return {0.0, 1.0};
    if (y <= 0.0) return {1.0, 0.0};
    const double front = std::exp(a * ln_x + b * ln_y - ln_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) {
        const double lo = front * beta_cf(a, b, x) / a;
        return {lo, 1.0 - lo};
    }
    const double up = front * beta_cf(b, a, y) / b;
    return {1.0 - up, up};
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
        throw Error(ErrorCode::domain, "incomplete beta needs a, b > 0 and 0 <= x <= 1");
    }
    const double y = 1.0 - x;
    return incomplete_beta_pair(a, b, x, y, std::log(x), std::log1p(-x)).lower;
}

double f_survival(double f, double d1, double d2) {
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw Error(ErrorCode::domain, "F degrees of freedom must be > 0");
    if (std::isnan(f)) throw Error(ErrorCode::domain, "F argument is NaN");
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    // x = r / (1 + r), y = 1 / (1 + r)
    const double r = d1 * f / d2;
    const double l1p = std::log1p(r);
    const double x = r / (1.0 + r);
    const double y = 1.0 / (1.0 + r);
    return incomplete_beta_pair(d1 / 2.0, d2 / 2.0, x, y, std::log(r) - l1p, -l1p).upper;
}

double f_quantile(double alpha, double d1, double d2) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorCode::domain, "alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
    if (!(d1 >= 1.0) || !(d2 >= 1.0) || !std::isfinite(d1) || !std::isfinite(d2)) {
        throw Error(ErrorCode::domain, "F degrees of freedom must be >= 1");
    }
    double lo = 0.0;
    double hi = 1.0;
    while (f_survival(hi, d1, d2) > alpha) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw Error(ErrorCode::numeric, "F quantile bracket diverged");
    }
    // survival is decreasing in f
    for (int it = 0; it < 200; ++it) {
        const double mid = lo + (hi - lo) / 2.0;
        if (mid <= lo || mid >= hi) break;
        if (f_survival(mid, d1, d2) > alpha) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-13 * std::max(1.0, hi)) break;
    }
    return lo + (hi - lo) / 2.0;
}

double t2_threshold(std::size_t n_components, std::size_t n_samples, double alpha) {
    if (n_components < 1 || n_samples <= n_components) {
        throw Error(ErrorCode::domain, "T2 threshold needs N > A >= 1 (A=" +
                                           std::to_string(n_components) +
                                           ", N=" + std::to_string(n_samples) + ")");
    }
    const auto a = static_cast<double>(n_components);
    const auto n = static_cast<double>(n_samples);
    const double factor = (n - 1.0) * (n + 1.0) * a / (n * (n - a));
    return factor * f_quantile(alpha, a, n - a);
}

}  // namespace plantclean
