#ifndef GARS_STATS_HPP_
#define GARS_STATS_HPP_

namespace gars {

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse standard normal CDF. Acklam's rational approximation refined with one
/// Halley step on erfc; absolute error well below 1e-9 on (1e-300, 1-1e-16).
double normal_quantile(double p);

/// Regularized lower incomplete gamma P(a, x) via series / continued fraction.
double gamma_p(double a, double x);

/// Chi-squared quantile: smallest x with P(d/2, x/2) = p. Newton from the
/// Wilson-Hilferty start, bracketed by bisection; accuracy ~1e-10.
double chisq_quantile(double p, int d);

}  // namespace gars

#endif  // GARS_STATS_HPP_
