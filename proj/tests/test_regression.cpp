#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "gsareg/dataset.hpp"
#include "gsareg/regression.hpp"
#include "support/oracles.hpp"

using namespace gsareg;

namespace {

Dataset random_dataset(int n, int p, std::uint64_t seed, double noise_sd = 1.0,
                       std::vector<double> beta = {}) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = gauss(eng);
    beta.resize(p, 0.0);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        double v = noise_sd * gauss(eng);
        for (int j = 0; j < p; ++j) v += beta[j] * x(i, j);
        y[i] = v;
    }
    return Dataset(y, x);
}

}  // namespace

TEST_CASE("empty model: variance of the de-meaned response") {
    Dataset d = random_dataset(50, 4, 11);
    FitResult r = fit(d, ModelSpec(4));
    REQUIRE(r.k_gamma == 0);
    REQUIRE(r.beta_hat.isZero(0.0));
    double msq = d.y().squaredNorm() / d.n();
    REQUIRE(r.sigma2_ml == Catch::Approx(msq).epsilon(1e-12));
    REQUIRE(r.sigma2_unb == Catch::Approx(msq).epsilon(1e-12));
}

TEST_CASE("noiseless recovery of the generating coefficients") {
    Dataset d = random_dataset(60, 5, 12, 0.0, {2.0, 0.0, -1.5, 0.0, 0.0});
    FitResult r = fit(d, ModelSpec::from_indices(5, {0, 2}));
    REQUIRE(r.residuals.norm() < 1e-8);
    REQUIRE(r.beta_hat[0] == Catch::Approx(2.0).margin(1e-8));
    REQUIRE(r.beta_hat[2] == Catch::Approx(-1.5).margin(1e-8));
    REQUIRE(r.beta_hat[1] == 0.0);
    REQUIRE(r.beta_hat[3] == 0.0);

    FitResult full = fit(d, ModelSpec::full(5));
    REQUIRE(full.residuals.norm() < 1e-8);
    REQUIRE(full.beta_hat[0] == Catch::Approx(2.0).margin(1e-8));
}

TEST_CASE("random 20x5 system matches the long-double normal-equations oracle") {
    Dataset d = random_dataset(20, 5, 13, 0.7, {1.0, -0.5, 0.0, 0.25, 0.0});
    ModelSpec spec = ModelSpec::from_indices(5, {0, 1, 3, 4});
    FitResult r = fit(d, spec);

    std::vector<std::vector<double>> cols;
    for (int j : spec.indices()) {
        std::vector<double> c(d.n());
        for (int i = 0; i < d.n(); ++i) c[i] = d.X()(i, j);
        cols.push_back(c);
    }
    std::vector<double> y(d.n());
    for (int i = 0; i < d.n(); ++i) y[i] = d.y()[i];
    auto beta = oracle::solve_normal_equations(cols, y);
    const std::vector<int> idx = spec.indices();
    for (std::size_t c = 0; c < beta.size(); ++c)
        REQUIRE(r.beta_hat[idx[c]] ==
                Catch::Approx(static_cast<double>(beta[c])).margin(1e-8));
}

TEST_CASE("variance estimates satisfy the dof identity and residual orthogonality") {
    Dataset d = random_dataset(80, 7, 14, 1.3, {0.5, 0.0, 1.0, 0.0, 0.0, -2.0, 0.1});
    std::mt19937_64 eng(99);
    for (int rep = 0; rep < 20; ++rep) {
        std::uint64_t mask = eng() & 0x7Ful;
        ModelSpec spec = ModelSpec::from_mask(7, mask);
        FitResult r = fit(d, spec);
        REQUIRE(r.sigma2_unb * (r.n_used - r.k_gamma) ==
                Catch::Approx(r.sigma2_ml * r.n_used).epsilon(1e-10));
        for (int j : spec.indices()) {
            double dot = std::abs(r.residuals.dot(d.X().col(j)));
            double scale = d.X().col(j).norm() * std::max(r.residuals.norm(), 1.0);
            REQUIRE(dot <= 1e-8 * scale);
        }
        REQUIRE(r.bic == Catch::Approx(std::log(r.sigma2_ml) +
                                       r.k_gamma * std::log(80.0) / 80.0).margin(1e-12));
        REQUIRE(r.aic == Catch::Approx(std::log(r.sigma2_ml) + 2.0 * r.k_gamma / 80.0)
                             .margin(1e-12));
        REQUIRE(r.hp_ic == Catch::Approx(std::log(r.sigma2_ml) + r.k_gamma / 80.0)
                               .margin(1e-12));
    }
}

TEST_CASE("adding a regressor never increases RSS") {
    Dataset d = random_dataset(60, 8, 15, 1.0, {1.0, 0.0, 0.0, 0.5});
    std::mt19937_64 eng(7);
    for (int rep = 0; rep < 50; ++rep) {
        ModelSpec a = ModelSpec::from_mask(8, eng() & 0xFFul);
        int extra = static_cast<int>(eng() % 8);
        ModelSpec b = a;
        b.set(extra, true);
        REQUIRE(fit(d, a).rss >= fit(d, b).rss - 1e-9);
    }
}

TEST_CASE("fit is independent of index construction order") {
    Dataset d = random_dataset(40, 6, 16, 0.8, {1.0, -1.0, 0.0, 0.0, 0.3});
    ModelSpec s1 = ModelSpec::from_indices(6, {4, 0, 1});
    ModelSpec s2 = ModelSpec::from_indices(6, {1, 4, 0});
    FitResult r1 = fit(d, s1);
    FitResult r2 = fit(d, s2);
    REQUIRE((r1.beta_hat - r2.beta_hat).norm() == 0.0);
    REQUIRE(r1.rss == r2.rss);
}

TEST_CASE("window fit equals a fit on the window rows alone") {
    Dataset d = random_dataset(100, 5, 17, 1.0, {0.7, 0.0, -0.4});
    const int start = 10, len = 60;
    ModelSpec spec = ModelSpec::from_indices(5, {0, 2, 3});
    FitResult rw = fit_window(d, spec, start, len);

    Eigen::VectorXd ysub = d.y_raw().segment(start, len);
    Eigen::MatrixXd xsub = d.X_raw().middleRows(start, len);
    FitResult rs = fit(Dataset(ysub, xsub), spec);
    REQUIRE(rw.rss == Catch::Approx(rs.rss).epsilon(1e-10));
    REQUIRE((rw.beta_hat - rs.beta_hat).norm() < 1e-10);
    for (int c = 0; c < rw.t_stats.size(); ++c)
        REQUIRE(rw.t_stats[c] == Catch::Approx(rs.t_stats[c]).epsilon(1e-10));
}

TEST_CASE("t statistics match a direct covariance computation") {
    Dataset d = random_dataset(70, 4, 18, 1.1, {1.0, 0.0, 0.5, 0.0});
    ModelSpec spec = ModelSpec::from_indices(4, {0, 2});
    FitResult r = fit(d, spec);
    Eigen::MatrixXd xs(70, 2);
    xs.col(0) = d.X().col(0);
    xs.col(1) = d.X().col(2);
    Eigen::MatrixXd cov = r.sigma2_unb * (xs.transpose() * xs).inverse();
    REQUIRE(r.t_stats[0] == Catch::Approx(r.beta_hat[0] / std::sqrt(cov(0, 0))).epsilon(1e-9));
    REQUIRE(r.t_stats[1] == Catch::Approx(r.beta_hat[2] / std::sqrt(cov(1, 1))).epsilon(1e-9));
}

TEST_CASE("GramCache hot path agrees with the full fit") {
    Dataset d = random_dataset(90, 10, 19, 1.0, {1.0, 0.0, 0.0, -0.7});
    GramCache cache(d);
    SubfitWorkspace ws(d.p());
    std::mt19937_64 eng(3);
    for (int rep = 0; rep < 40; ++rep) {
        ModelSpec spec = ModelSpec::from_mask(10, eng() & 0x3FFul);
        FitResult slow = fit(d, spec);
        SubfitSolution s = cache.solve(spec, ws);
        REQUIRE(s.rss == Catch::Approx(slow.rss).margin(1e-8 * std::max(slow.rss, 1.0)));
        REQUIRE_FALSE(s.degenerate);
        REQUIRE(criterion_value(cache, spec, QKind::bic, ws) ==
                Catch::Approx(slow.bic).margin(1e-10));
        REQUIRE(criterion_value(cache, spec, QKind::aic, ws) ==
                Catch::Approx(slow.aic).margin(1e-10));
        REQUIRE(criterion_value(cache, spec, QKind::hp, ws) ==
                Catch::Approx(slow.hp_ic).margin(1e-10));
    }

    GramCache win(d, 5, 50);
    ModelSpec spec = ModelSpec::from_indices(10, {0, 3, 7});
    REQUIRE(win.rss(spec) == Catch::Approx(fit_window(d, spec, 5, 50).rss).epsilon(1e-10));
}

TEST_CASE("duplicate column triggers the pseudo-inverse path with a flag") {
    std::mt19937_64 eng(20);
    std::normal_distribution<double> gauss;
    const int n = 30;
    Eigen::MatrixXd x(n, 4);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = gauss(eng);
        x(i, 1) = gauss(eng);
        x(i, 2) = x(i, 0);  // exact copy
        x(i, 3) = gauss(eng);
    }
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = 2.0 * x(i, 0) + gauss(eng);
    Dataset d(y, x);

    FitResult r = fit(d, ModelSpec::from_indices(4, {0, 1, 2}));
    REQUIRE(r.degenerate);
    for (int j : {0, 1, 2}) {
        double dot = std::abs(r.residuals.dot(d.X().col(j)));
        REQUIRE(dot <= 1e-6 * d.X().col(j).norm() * std::max(r.residuals.norm(), 1.0));
    }
    // Minimum-norm solution splits the weight across the two copies.
    REQUIRE(r.beta_hat[0] == Catch::Approx(r.beta_hat[2]).margin(1e-8));

    GramCache cache(d);
    SubfitWorkspace ws(4);
    SubfitSolution s = cache.solve(ModelSpec::from_indices(4, {0, 2}), ws);
    REQUIRE(s.degenerate);
    REQUIRE(s.rss == Catch::Approx(fit(d, ModelSpec::from_indices(4, {0})).rss).epsilon(1e-8));
}

TEST_CASE("F test against the full model") {
    Dataset d = random_dataset(139, 12, 21, 1.0, {3.0, 0.0, 2.5});
    SECTION("the full model itself scores 1") {
        REQUIRE(f_test_vs_gum(d, ModelSpec::full(12)).p.value == 1.0);
    }
    SECTION("the empty model is strongly rejected under signal") {
        REQUIRE(f_test_vs_gum(d, ModelSpec(12)).p.value < 1e-2);
    }
    SECTION("the true support is comfortable") {
        REQUIRE(f_test_vs_gum(d, ModelSpec::from_indices(12, {0, 2})).p.value > 0.05);
    }
    SECTION("nested specs have ordered RSS") {
        ModelSpec a = ModelSpec::from_indices(12, {0});
        ModelSpec b = ModelSpec::from_indices(12, {0, 2});
        REQUIRE(fit(d, a).rss >= fit(d, b).rss);
    }
    SECTION("matches a hand-built F statistic") {
        ModelSpec spec = ModelSpec::from_indices(12, {0, 2, 5});
        double rss_s = fit(d, spec).rss;
        double rss_g = fit(d, ModelSpec::full(12)).rss;
        double fstat = ((rss_s - rss_g) / (12 - 3)) / (rss_g / (139 - 12));
        REQUIRE(f_test_vs_gum(d, spec).p.value ==
                Catch::Approx(f_sf(fstat, 9, 127).value).epsilon(1e-10));
    }
}

TEST_CASE("F test on noiseless data flags degeneracy") {
    Dataset d = random_dataset(50, 4, 22, 0.0, {1.0, 0.0, -2.0, 0.0});
    GumFTest at_support = f_test_vs_gum(d, ModelSpec::from_indices(4, {0, 2}));
    REQUIRE(at_support.degenerate);
    REQUIRE(at_support.p.value == 1.0);
    GumFTest missing = f_test_vs_gum(d, ModelSpec::from_indices(4, {0}));
    REQUIRE(missing.degenerate);
    REQUIRE(missing.p.value == 0.0);
}

TEST_CASE("input validation") {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(5);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(5, 6);
    REQUIRE_THROWS_AS(Dataset(y, x), std::invalid_argument);  // n <= p

    Dataset d = random_dataset(30, 3, 23);
    REQUIRE_THROWS_AS(fit(d, ModelSpec(4)), std::invalid_argument);
    REQUIRE_THROWS_AS(fit_window(d, ModelSpec(3), 0, 31), std::invalid_argument);
    REQUIRE_THROWS_AS(GramCache(d, -1, 10), std::invalid_argument);

    Eigen::VectorXd ybad = y;
    ybad[2] = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd xs = Eigen::MatrixXd::Random(5, 2);
    REQUIRE_THROWS_AS(Dataset(ybad, xs), std::invalid_argument);
}
