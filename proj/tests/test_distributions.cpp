#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gsareg/distributions.hpp"
#include "support/oracles.hpp"

using namespace gsareg;

TEST_CASE("normal_cdf basic values") {
    REQUIRE(normal_cdf(0.0) == Catch::Approx(0.5).margin(1e-15));
    REQUIRE(normal_cdf(1.959964) == Catch::Approx(0.975).margin(1e-6));
    REQUIRE(normal_cdf(-1.959964) == Catch::Approx(0.025).margin(1e-6));
}

TEST_CASE("normal_cdf agrees with quadrature of the density") {
    for (double x : {-6.0, -3.5, -1.0, -0.2, 0.0, 0.7, 1.644854, 2.575829, 4.0, 7.5}) {
        REQUIRE(normal_cdf(x) == Catch::Approx(oracle::normal_cdf_quad(x)).margin(1e-8));
    }
}

TEST_CASE("chi2_sf closed forms at even degrees of freedom") {
    for (double x : {0.01, 0.5, 2.0, 5.991465, 11.3, 40.0}) {
        REQUIRE(chi2_sf(x, 2).value == Catch::Approx(std::exp(-0.5 * x)).epsilon(1e-12));
        REQUIRE(chi2_sf(x, 4).value ==
                Catch::Approx(std::exp(-0.5 * x) * (1.0 + 0.5 * x)).epsilon(1e-12));
    }
    REQUIRE(chi2_sf(5.991465, 2).value == Catch::Approx(0.05).margin(1e-6));
    REQUIRE(chi2_sf(3.841459, 1).value == Catch::Approx(0.05).margin(1e-6));
}

TEST_CASE("chi2_sf agrees with quadrature across degrees of freedom") {
    for (int df : {1, 2, 3, 4, 7, 12, 40, 99}) {
        for (double q : {0.1, 0.5, 1.0, 1.7, 3.0}) {
            const double x = q * df;
            const double expect = 1.0 - oracle::chi2_cdf_quad(x, df);
            REQUIRE(chi2_sf(x, df).value == Catch::Approx(expect).margin(1e-8));
        }
    }
}

TEST_CASE("chi2 with one degree of freedom matches the folded normal") {
    for (double x : {0.04, 0.5, 1.0, 3.841459, 9.0, 20.0}) {
        const double expect = 2.0 * (1.0 - normal_cdf(std::sqrt(x)));
        REQUIRE(chi2_sf(x, 1).value == Catch::Approx(expect).margin(1e-10));
    }
}

TEST_CASE("f_sf reference values and closed form at d1 = 2") {
    REQUIRE(f_sf(4.102821, 2, 10).value == Catch::Approx(0.05).margin(1e-6));
    for (int d2 : {2, 6, 10, 30}) {
        for (double x : {0.3, 1.0, 2.5, 6.0}) {
            const double expect = std::pow(d2 / (d2 + 2.0 * x), 0.5 * d2);
            REQUIRE(f_sf(x, 2, d2).value == Catch::Approx(expect).epsilon(1e-11));
        }
    }
}

TEST_CASE("f_sf agrees with quadrature") {
    const int d1s[] = {1, 2, 5, 10, 38, 40};
    const int d2s[] = {4, 10, 85, 99};
    for (int d1 : d1s) {
        for (int d2 : d2s) {
            for (double x : {0.2, 0.8, 1.0, 1.8, 3.2}) {
                const double expect = 1.0 - oracle::f_cdf_quad(x, d1, d2);
                REQUIRE(f_sf(x, d1, d2).value == Catch::Approx(expect).margin(1e-8));
            }
        }
    }
}

TEST_CASE("t statistic two-sided p equals F with one numerator df") {
    for (int df : {3, 10, 99}) {
        for (double t : {0.0, 0.5, 1.96, 3.4}) {
            const double expect = 1.0 - oracle::f_cdf_quad(t * t, 1, df);
            REQUIRE(t_two_sided_p(t, df).value == Catch::Approx(expect).margin(1e-8));
            REQUIRE(t_two_sided_p(-t, df).value ==
                    Catch::Approx(t_two_sided_p(t, df).value).epsilon(1e-14));
        }
    }
}

TEST_CASE("survival functions are monotone and bounded") {
    std::mt19937_64 gen(20240811);
    std::uniform_real_distribution<double> ux(0.0, 30.0);
    std::uniform_int_distribution<int> udf(1, 60);
    for (int rep = 0; rep < 200; ++rep) {
        double x1 = ux(gen), x2 = ux(gen);
        if (x1 > x2) std::swap(x1, x2);
        const int df = udf(gen);
        const double s1 = chi2_sf(x1, df).value;
        const double s2 = chi2_sf(x2, df).value;
        REQUIRE(s1 >= s2 - 1e-12);
        REQUIRE(s1 >= 0.0);
        REQUIRE(s1 <= 1.0);
        const int d2 = udf(gen);
        const double f1 = f_sf(x1 * 0.3, df, d2).value;
        const double f2 = f_sf(x2 * 0.3, df, d2).value;
        REQUIRE(f1 >= f2 - 1e-12);
    }
}

TEST_CASE("domain violations are rejected") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(normal_cdf(nan), std::invalid_argument);
    REQUIRE_THROWS_AS(chi2_sf(nan, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(chi2_sf(-0.5, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(chi2_sf(1.0, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(f_sf(1.0, 0, 5), std::invalid_argument);
    REQUIRE_THROWS_AS(f_sf(-1.0, 2, 5), std::invalid_argument);
    REQUIRE_THROWS_AS(PValue(1.5), std::invalid_argument);
    REQUIRE_THROWS_AS(PValue(nan), std::invalid_argument);
}
