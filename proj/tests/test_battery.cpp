#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gsareg/battery.hpp"
#include "gsareg/dgp.hpp"

using namespace gsareg;

namespace {

struct NullSample {
    Dataset data;
    ModelSpec spec;
};

// y = x1 + 0.5 x2 + e over a 5-column design; the fitted spec is correct.
NullSample null_sample(int n, std::uint64_t seed,
                       const std::function<double(std::mt19937_64&)>& error_draw) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd x(n, 5);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 5; ++j) x(i, j) = gauss(eng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = x(i, 0) + 0.5 * x(i, 1) + error_draw(eng);
    return {Dataset(y, x), ModelSpec::from_indices(5, {0, 1})};
}

double normal_error(std::mt19937_64& eng) {
    static thread_local std::normal_distribution<double> gauss(0.0, 1.0);
    return gauss(eng);
}

}  // namespace

TEST_CASE("the full model scores 1 on the nested F test") {
    NullSample s = null_sample(300, 1, normal_error);
    BatteryReport rep = run_battery(s.data, ModelSpec::full(5), 0.05, 1.0);
    REQUIRE(rep.f_vs_gum.value == 1.0);
    REQUIRE(rep.min_p <= 1.0);
}

TEST_CASE("battery is deterministic and min_p is the minimum") {
    NullSample s = null_sample(400, 2, normal_error);
    BatteryReport a = run_battery(s.data, s.spec, 0.05, 0.9);
    BatteryReport b = run_battery(s.data, s.spec, 0.05, 0.9);
    REQUIRE(a.min_p == b.min_p);
    REQUIRE(a.normality.value == b.normality.value);
    double expect = std::min({a.normality.value, a.autocorrelation.value, a.arch.value,
                              a.chow_split.value, a.chow_oos.value, a.f_vs_gum.value});
    REQUIRE(a.min_p == expect);
    REQUIRE(a.rejected == (a.min_p <= 0.05));
}

TEST_CASE("estimation fraction is restricted to the two supported windows") {
    NullSample s = null_sample(200, 3, normal_error);
    REQUIRE_THROWS_AS(run_battery(s.data, s.spec, 0.05, 0.8), std::invalid_argument);
    REQUIRE_THROWS_AS(run_battery(s.data, s.spec, 1.5, 0.9), std::invalid_argument);
}

TEST_CASE("all six tests are close to nominal size under the null") {
    const int reps = 600;
    const double alpha = 0.05;
    int rej_norm = 0, rej_auto = 0, rej_arch = 0, rej_cs = 0, rej_oos = 0, rej_gum = 0;
    for (int rep = 0; rep < reps; ++rep) {
        NullSample s = null_sample(4000, 10000 + rep, normal_error);
        BatteryReport r = run_battery(s.data, s.spec, alpha, 1.0);
        rej_norm += r.normality.value <= alpha;
        rej_auto += r.autocorrelation.value <= alpha;
        rej_arch += r.arch.value <= alpha;
        rej_cs += r.chow_split.value <= alpha;
        rej_oos += r.chow_oos.value <= alpha;
        rej_gum += r.f_vs_gum.value <= alpha;
    }
    auto rate = [&](int c) { return static_cast<double>(c) / reps; };
    REQUIRE(rate(rej_norm) == Catch::Approx(alpha).margin(0.025));
    REQUIRE(rate(rej_auto) == Catch::Approx(alpha).margin(0.025));
    REQUIRE(rate(rej_arch) == Catch::Approx(alpha).margin(0.025));
    REQUIRE(rate(rej_cs) == Catch::Approx(alpha).margin(0.025));
    REQUIRE(rate(rej_oos) == Catch::Approx(alpha).margin(0.025));
    REQUIRE(rate(rej_gum) == Catch::Approx(alpha).margin(0.025));
}

TEST_CASE("skewed errors trip the normality test") {
    std::chi_squared_distribution<double> chi3(3.0);
    auto skewed = [&](std::mt19937_64& eng) { return chi3(eng) - 3.0; };
    int reject = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        NullSample s = null_sample(2000, 20000 + rep, skewed);
        reject += run_battery(s.data, s.spec, 0.05, 1.0).normality.value < 0.01;
    }
    REQUIRE(reject > static_cast<int>(0.95 * reps));
}

TEST_CASE("autocorrelated errors trip the LM test") {
    int reject = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        std::mt19937_64 noise_eng(30000 + rep);
        std::normal_distribution<double> gauss(0.0, 1.0);
        double u = 0.0;
        auto ar_error = [&](std::mt19937_64&) {
            u = 0.5 * u + gauss(noise_eng);
            return u;
        };
        NullSample s = null_sample(1000, 31000 + rep, ar_error);
        reject += run_battery(s.data, s.spec, 0.05, 1.0).autocorrelation.value < 0.01;
    }
    REQUIRE(reject > static_cast<int>(0.95 * reps));
}

TEST_CASE("conditionally heteroskedastic errors trip the arch test") {
    int reject = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        std::mt19937_64 noise_eng(40000 + rep);
        std::normal_distribution<double> gauss(0.0, 1.0);
        double prev = 0.0;
        auto arch_error = [&](std::mt19937_64&) {
            prev = gauss(noise_eng) * std::sqrt(0.2 + 0.8 * prev * prev);
            return prev;
        };
        NullSample s = null_sample(2000, 41000 + rep, arch_error);
        reject += run_battery(s.data, s.spec, 0.05, 1.0).arch.value < 0.01;
    }
    REQUIRE(reject > static_cast<int>(0.90 * reps));
}

TEST_CASE("a midpoint coefficient break trips the split test") {
    std::mt19937_64 eng(50);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = 1000;
    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) x(i, j) = gauss(eng);
        const double beta = i < n / 2 ? 1.0 : 2.0;
        y[i] = beta * x(i, 0) + gauss(eng);
    }
    Dataset d(y, x);
    BatteryReport r = run_battery(d, ModelSpec::from_indices(3, {0}), 0.05, 1.0);
    REQUIRE(r.chow_split.value < 1e-6);
}

TEST_CASE("a level shift in the holdout tail trips the predictive test") {
    std::mt19937_64 eng(51);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = 1000;
    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) x(i, j) = gauss(eng);
        y[i] = x(i, 0) + gauss(eng) + (i >= 900 ? 3.0 : 0.0);
    }
    Dataset d(y, x);
    BatteryReport r = run_battery(d, ModelSpec::from_indices(3, {0}), 0.05, 0.9);
    REQUIRE(r.chow_oos.value < 1e-6);
}

TEST_CASE("noiseless data degrades gracefully") {
    std::mt19937_64 eng(52);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = 200;
    Eigen::MatrixXd x(n, 4);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 4; ++j) x(i, j) = gauss(eng);
        y[i] = 2.0 * x(i, 0) - x(i, 2);
    }
    Dataset d(y, x);

    BatteryReport at_support = run_battery(d, ModelSpec::from_indices(4, {0, 2}), 0.05, 0.9);
    REQUIRE(at_support.degenerate.normality);
    REQUIRE(at_support.degenerate.f_vs_gum);
    REQUIRE(at_support.min_p == 1.0);
    REQUIRE_FALSE(at_support.rejected);

    BatteryReport missing = run_battery(d, ModelSpec::from_indices(4, {0}), 0.05, 0.9);
    REQUIRE(missing.f_vs_gum.value == 0.0);
    REQUIRE(missing.rejected);
}

TEST_CASE("battery rejection of the full model stays within the union bound") {
    // Correctly specified strong design, evaluated at the full model: the
    // six-test union should reject no more often than 1.5 x (1 - 0.95^6).
    ExogenousPanel panel = synthesize_panel(99, 139);
    DgpConfig config = dgp_config("6B");
    const int reps = 2000;
    int rejected = 0;
    for (int rep = 0; rep < reps; ++rep) {
        SimulatedSample s = simulate(config, panel, 60000 + rep);
        BatteryContext ctx(s.dataset, 0.9);
        rejected += ctx.run(ModelSpec::full(40), 0.05).rejected;
    }
    const double rate = static_cast<double>(rejected) / reps;
    const double bound = 1.0 - std::pow(0.95, 6.0);
    REQUIRE(rate <= 1.5 * bound);
    REQUIRE(rate >= 0.02);  // sanity: individual tests do fire
}
