#pragma once

#include <cstddef>

namespace plantclean {

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
/// Throws `Error(domain)` outside that range and `Error(numeric)` if the
/// continued fraction fails to converge.
double incomplete_beta(double a, double b, double x);

/// Upper-tail survival function of F(d1, d2): P(F > f).
double f_survival(double f, double d1, double d2);

/// Upper-tail critical value of F(d1, d2): P(F > q) = alpha, solved to an
/// absolute tolerance of 1e-8 or better. Throws `Error(domain)` unless
/// 0 < alpha < 1 and d1, d2 >= 1.
double f_quantile(double alpha, double d1, double d2);

/// Hotelling control limit for A retained components fitted on N samples:
///
///     T_alpha = (N^2 - 1) A / (N (N - A)) * F_alpha(A, N - A)
///
/// Throws `Error(domain)` unless N > A >= 1.
double t2_threshold(std::size_t n_components, std::size_t n_samples, double alpha);

}  // namespace plantclean
