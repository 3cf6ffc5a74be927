#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gsareg/dataset.hpp"
#include "gsareg/model_spec.hpp"
#include "gsareg/rng.hpp"

namespace gsareg {

enum class ErrorMode { ar1_corrected, ma1_original };
enum class PanelSource { csv_ingested, synthetic_seeded };

namespace design {

inline constexpr int kSeries = 18;     // exogenous series
inline constexpr int kMaxLag = 4;      // deepest response lag in the design
inline constexpr int kColumns = 40;    // 18 levels + 18 first lags + 4 response lags
inline constexpr int kSampleLength = 139;

// 0-based positions of the two signal-bearing series among the 18.
inline constexpr int kSeriesG = 2;
inline constexpr int kSeriesM1 = 10;

// Synthetic-panel shape: mildly persistent, cross-correlated regressors.
inline constexpr double kPanelAr = 0.5;
inline constexpr double kPanelInnovCorr = 0.3;

// Scales of the two signal-bearing series. Together with the catalog's error
// scales these put the strongly identified coefficients in one |t| cluster
// (roughly 7.5-11) and the weakly identified ones below |t| = 1.2.
inline constexpr double kScaleG = 4.0;
inline constexpr double kScaleM1 = 4.8;

inline int level_col(int series) { return series; }
inline int lag_col(int series) { return kSeries + series; }
inline int ylag_col(int lag) { return 2 * kSeries + lag - 1; }

}  // namespace design

struct ExogenousPanel {
    Eigen::MatrixXd series;  // (n + kMaxLag) x 18
    PanelSource source = PanelSource::synthetic_seeded;
    std::uint64_t seed = 0;
    std::vector<std::string> names;

    int rows() const { return static_cast<int>(series.rows()); }
    int n() const { return rows() - design::kMaxLag; }
};

// 18 cross-correlated stationary AR(1) series of length n + 4, deterministic
// in the seed. Each series has unit stationary variance before the two
// signal-column scales are applied.
inline ExogenousPanel synthesize_panel(std::uint64_t seed, int n) {
    if (n < 50) throw std::invalid_argument("synthesize_panel: need n >= 50");
    const int rows = n + design::kMaxLag;
    ExogenousPanel panel;
    panel.seed = seed;
    panel.source = PanelSource::synthetic_seeded;
    panel.series.resize(rows, design::kSeries);
    panel.names.reserve(design::kSeries);
    for (int i = 0; i < design::kSeries; ++i) panel.names.push_back("x" + std::to_string(i + 1));

    auto eng = make_engine(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double wf = std::sqrt(design::kPanelInnovCorr);
    const double wi = std::sqrt(1.0 - design::kPanelInnovCorr);
    Eigen::VectorXd state = Eigen::VectorXd::Zero(design::kSeries);
    const int burn = 50;
    for (int t = -burn; t < rows; ++t) {
        const double f = gauss(eng);
        for (int i = 0; i < design::kSeries; ++i) {
            const double e = wf * f + wi * gauss(eng);
            state[i] = design::kPanelAr * state[i] + e;
            if (t >= 0) panel.series(t, i) = state[i];
        }
    }
    const double stationary_sd =
        std::sqrt(1.0 / (1.0 - design::kPanelAr * design::kPanelAr));
    panel.series /= stationary_sd;
    panel.series.col(design::kSeriesG) *= design::kScaleG;
    panel.series.col(design::kSeriesM1) *= design::kScaleM1;
    return panel;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

}  // namespace detail

// Reads a pre-differenced 18-series panel from CSV: one header row with the
// series names, then one row per time point, comma-separated, no missing
// cells. Errors identify the offending row and column.
inline ExogenousPanel load_panel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("panel csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("panel csv: empty file");
    std::vector<std::string> header = detail::split_csv_line(line);
    if (static_cast<int>(header.size()) != design::kSeries) {
        std::string msg = "panel csv: expected " + std::to_string(design::kSeries) +
                          " columns, header has " + std::to_string(header.size());
        // If the names follow the x1..x18 convention, say which one is absent.
        for (int i = 0; i < design::kSeries; ++i) {
            const std::string want = "x" + std::to_string(i + 1);
            if (std::find(header.begin(), header.end(), want) == header.end()) {
                msg += " (missing " + want + ")";
                break;
            }
        }
        throw std::runtime_error(msg);
    }

    std::vector<std::array<double, design::kSeries>> data;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> cells = detail::split_csv_line(line);
        if (static_cast<int>(cells.size()) != design::kSeries)
            throw std::runtime_error("panel csv row " + std::to_string(row) + ": expected " +
                                     std::to_string(design::kSeries) + " cells, found " +
                                     std::to_string(cells.size()));
        std::array<double, design::kSeries> vals{};
        for (int c = 0; c < design::kSeries; ++c) {
            const std::string& cell = cells[c];
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() ||
                !std::isfinite(v))
                throw std::runtime_error("panel csv row " + std::to_string(row) + ", column " +
                                         header[c] + ": cannot parse '" + cell + "'");
            vals[c] = v;
        }
        data.push_back(vals);
    }
    if (static_cast<int>(data.size()) < design::kMaxLag + 1)
        throw std::runtime_error("panel csv: only " + std::to_string(data.size()) +
                                 " data rows; need at least " +
                                 std::to_string(design::kMaxLag + 1));

    ExogenousPanel panel;
    panel.source = PanelSource::csv_ingested;
    panel.names = std::move(header);
    panel.series.resize(static_cast<int>(data.size()), design::kSeries);
    for (std::size_t r = 0; r < data.size(); ++r)
        for (int c = 0; c < design::kSeries; ++c)
            panel.series(static_cast<int>(r), c) = data[r][c];
    return panel;
}

// One generating design: an error recursion (AR or, in the legacy bug mode,
// MA with the same parameters) plus contemporaneous loadings on the two
// signal series. The response regression happens on exp(y) when
// exp_transform is set.
struct DgpConfig {
    std::string id;
    double rho1 = 0.0;
    double rho2 = 0.0;
    double beta_g = 0.0;
    double beta_m = 0.0;
    double sigma_eps = 1.0;
    ErrorMode error_mode = ErrorMode::ar1_corrected;
    bool exp_transform = false;
    ModelSpec true_spec{design::kColumns};
};

inline const std::vector<std::string>& dgp_ids() {
    static const std::vector<std::string> ids = {"1", "2",  "3",  "4", "5", "6",
                                                 "6A", "6B", "7", "8", "9"};
    return ids;
}

inline DgpConfig dgp_config(const std::string& id,
                            ErrorMode mode = ErrorMode::ar1_corrected) {
    auto make = [&](double r1, double r2, double bg, double bm, double sigma, bool expt,
                    std::vector<int> support_1based) {
        DgpConfig c;
        c.id = id;
        c.rho1 = r1;
        c.rho2 = r2;
        c.beta_g = bg;
        c.beta_m = bm;
        c.sigma_eps = sigma;
        c.error_mode = mode;
        c.exp_transform = expt;
        std::vector<int> zero_based;
        zero_based.reserve(support_1based.size());
        for (int i : support_1based) zero_based.push_back(i - 1);
        c.true_spec = ModelSpec::from_indices(design::kColumns, zero_based);
        return c;
    };
    if (id == "1") return make(0.0, 0.0, 0.0, 0.0, 130.0, false, {});
    if (id == "2") return make(0.75, 0.0, 0.0, 0.0, 85.99, false, {37});
    if (id == "3") return make(0.395, 0.3995, 0.0, 0.0, 0.00172, true, {37, 38});
    if (id == "4") return make(0.0, 0.0, 0.0, 1.33, 9.73, false, {11});
    if (id == "5") return make(0.0, 0.0, -0.046, 0.0, 0.11, false, {3});
    if (id == "6") return make(0.0, 0.0, -0.023, 0.67, 4.92, false, {3, 11});
    if (id == "6A") return make(0.0, 0.0, -0.32, 0.67, 4.92, false, {3, 11});
    if (id == "6B") return make(0.0, 0.0, -0.65, 0.67, 4.92, false, {3, 11});
    if (id == "7") return make(0.75, 0.0, 0.0, 1.33, 6.73, false, {11, 29, 37});
    if (id == "8") return make(0.75, 0.0, -0.046, 0.0, 0.073, false, {3, 21, 37});
    if (id == "9") return make(0.75, 0.0, -0.023, 0.67, 3.25, false, {3, 11, 21, 29, 37});
    throw std::invalid_argument("dgp_config: unknown id '" + id + "'");
}

// The 40-column coefficient vector equivalent to the AR error recursion:
// response lags carry the recursion parameters, contemporaneous loadings stay
// as configured, and each signal's first lag picks up -rho1 * loading.
inline Eigen::VectorXd implied_coefficients(const DgpConfig& config) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(design::kColumns);
    if (config.rho1 != 0.0) beta[design::ylag_col(1)] = config.rho1;
    if (config.rho2 != 0.0) beta[design::ylag_col(2)] = config.rho2;
    beta[design::level_col(design::kSeriesG)] = config.beta_g;
    beta[design::level_col(design::kSeriesM1)] = config.beta_m;
    beta[design::lag_col(design::kSeriesG)] = -config.rho1 * config.beta_g;
    beta[design::lag_col(design::kSeriesM1)] = -config.rho1 * config.beta_m;
    return beta;
}

struct SimulatedSample {
    Dataset dataset;
    ModelSpec true_spec;
    std::uint64_t replication_seed = 0;
};

// Draws one replication: innovations feed the error recursion (50 discarded
// warm-up steps, zero initial state), the response adds the contemporaneous
// signal terms, and the design matrix collects the 18 series, their first
// lags, and four lags of the regression response.
inline SimulatedSample simulate(const DgpConfig& config, const ExogenousPanel& panel,
                                std::uint64_t seed) {
    const int t_len = design::kSampleLength + design::kMaxLag;
    if (panel.rows() < t_len)
        throw std::invalid_argument("simulate: panel shorter than " + std::to_string(t_len) +
                                    " rows");
    auto eng = make_engine(seed);
    std::normal_distribution<double> gauss(0.0, config.sigma_eps);

    double u1 = 0.0, u2 = 0.0;  // error recursion state
    double e1 = 0.0, e2 = 0.0;  // trailing innovations for the MA mode
    auto step = [&](double eps) {
        double u;
        if (config.error_mode == ErrorMode::ar1_corrected)
            u = config.rho1 * u1 + config.rho2 * u2 + eps;
        else
            u = eps + config.rho1 * e1 + config.rho2 * e2;
        u2 = u1;
        u1 = u;
        e2 = e1;
        e1 = eps;
        return u;
    };
    for (int t = 0; t < 50; ++t) step(gauss(eng));

    Eigen::VectorXd response(t_len);
    for (int t = 0; t < t_len; ++t) {
        const double u = step(gauss(eng));
        const double y = config.beta_g * panel.series(t, design::kSeriesG) +
                         config.beta_m * panel.series(t, design::kSeriesM1) + u;
        response[t] = config.exp_transform ? std::exp(y) : y;
    }

    const int n = design::kSampleLength;
    Eigen::VectorXd yvec(n);
    Eigen::MatrixXd x(n, design::kColumns);
    std::vector<ColumnLabel> labels(design::kColumns);
    for (int i = 0; i < design::kSeries; ++i) {
        labels[design::level_col(i)] = {panel.names[i], i + 1, 0};
        labels[design::lag_col(i)] = {panel.names[i] + "_l1", i + 1, 1};
    }
    for (int l = 1; l <= design::kMaxLag; ++l)
        labels[design::ylag_col(l)] = {"y_l" + std::to_string(l), 0, l};

    for (int r = 0; r < n; ++r) {
        const int t = r + design::kMaxLag;
        yvec[r] = response[t];
        for (int i = 0; i < design::kSeries; ++i) {
            x(r, design::level_col(i)) = panel.series(t, i);
            x(r, design::lag_col(i)) = panel.series(t - 1, i);
        }
        for (int l = 1; l <= design::kMaxLag; ++l) x(r, design::ylag_col(l)) = response[t - l];
    }
    return SimulatedSample{Dataset(std::move(yvec), std::move(x), std::move(labels)),
                           config.true_spec, seed};
}

}  // namespace gsareg
