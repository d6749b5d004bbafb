#include "gars/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gars {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

namespace {

double normal_pdf(double x) { return 0.3989422804014326779 * std::exp(-0.5 * x * x); }

// Acklam's inverse normal CDF approximation (relative error ~1.15e-9).
double acklam(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

}  // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");
    double x = acklam(p);
    // One Halley refinement against the exact CDF.
    const double e = normal_cdf(x) - p;
    const double u = e / normal_pdf(x);
    x -= u / (1 + 0.5 * x * u);
    return x;
}

namespace {

double gamma_p_series(double a, double x) {
    double sum = 1.0 / a, term = sum;
    for (int n = 1; n < 500; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x), x >= a+1.
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1 - a, c = 1 / tiny, d = 1 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
    if (x < 0 || a <= 0) throw std::domain_error("gamma_p: bad arguments");
    if (x == 0) return 0.0;
    return (x < a + 1) ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double chisq_quantile(double p, int d) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("chisq_quantile: p must be in (0,1)");
    if (d < 1) throw std::domain_error("chisq_quantile: d must be >= 1");
    const double a = 0.5 * d;
    // Wilson-Hilferty start.
    const double z = normal_quantile(p);
    const double t = 1.0 - 2.0 / (9.0 * d) + z * std::sqrt(2.0 / (9.0 * d));
    double x = d * t * t * t;
    if (x <= 0) x = 0.5;
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        const double f = gamma_p(a, 0.5 * x) - p;
        if (f > 0)
            hi = x;
        else
            lo = x;
        const double dens =
            0.5 * std::exp(-0.5 * x + (a - 1) * std::log(0.5 * x) - std::lgamma(a));
        double step = (dens > 0) ? f / dens : 0.0;
        double nx = x - step;
        if (!(nx > lo && (nx < hi))) nx = std::isinf(hi) ? 2 * x : 0.5 * (lo + hi);
        if (std::fabs(nx - x) < 1e-12 * (1 + std::fabs(x))) {
            x = nx;
            break;
        }
        x = nx;
    }
    return x;
}

}  // namespace gars
