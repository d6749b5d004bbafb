#include <doctest.h>

#include <cmath>
#include <initializer_list>

#include "gars/stats.hpp"

using namespace gars;

namespace {

// Independent oracle: invert Phi by bisection on erf.
double quantile_by_bisection(double p) {
    double lo = -40, hi = 40;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double cdf = 0.5 * (1.0 + std::erf(mid / std::sqrt(2.0)));
        if (cdf < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("normal quantile against frozen constants and the bisection oracle") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
    CHECK(normal_quantile(0.99875) == doctest::Approx(3.023341439739).epsilon(1e-9));
    for (double p : {1e-6, 0.01, 0.2, 0.5, 0.7, 0.95, 0.999, 1 - 1e-7}) {
        CHECK(std::fabs(normal_quantile(p) - quantile_by_bisection(p)) < 1e-8);
    }
    CHECK_THROWS(normal_quantile(0.0));
    CHECK_THROWS(normal_quantile(1.0));
}

TEST_CASE("gamma_p agrees with the erf identity at a = 1/2") {
    // P(1/2, x) = erf(sqrt(x))
    for (double x : {0.01, 0.3, 1.0, 2.5, 9.0}) {
        CHECK(gamma_p(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));
    }
    // P(1, x) = 1 - exp(-x)
    for (double x : {0.2, 1.0, 4.0}) {
        CHECK(gamma_p(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-12));
    }
}

TEST_CASE("chi-squared quantiles") {
    // d=2 has the closed form -2 log(alpha)
    CHECK(chisq_quantile(0.95, 2) == doctest::Approx(-2.0 * std::log(0.05)).epsilon(1e-10));
    CHECK(chisq_quantile(0.95, 2) == doctest::Approx(5.991464547107979).epsilon(1e-10));
    // d=1 is the squared two-sided normal quantile
    const double z = normal_quantile(0.975);
    CHECK(chisq_quantile(0.95, 1) == doctest::Approx(z * z).epsilon(1e-9));
    // round trip through gamma_p
    for (int d : {1, 2, 3, 7, 20}) {
        for (double p : {0.5, 0.9, 0.99}) {
            const double x = chisq_quantile(p, d);
            CHECK(gamma_p(0.5 * d, 0.5 * x) == doctest::Approx(p).epsilon(1e-9));
        }
    }
}
