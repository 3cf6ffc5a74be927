#ifndef GSAREG_PARAMETRICNESS_HPP
#define GSAREG_PARAMETRICNESS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "gsareg/dgp.hpp"
#include "gsareg/regression.hpp"

namespace gsareg {

// Cutoff between parametric (detectable) and nonparametric (weak-signal)
// scenarios, as proposed by Liu and Yang (2011).
inline constexpr double kPiThreshold = 1.2;

enum class Parametricness { parametric, nonparametric };

struct PiReport {
    bool applicable = false;  // the true spec has at least one regressor
    bool valid = false;       // the reference criterion value is positive
    double pi = 0.0;
    std::map<int, double> icr;
    Parametricness classification = Parametricness::parametric;
    std::vector<int> weak_regressors;
    ModelSpec edgp;
};

namespace detail {

inline double info_criterion_on(const GramCache& cache, const ModelSpec& spec,
                                SubfitWorkspace& ws, double sigma2_ref, double lambda_n,
                                double d) {
    if (!(sigma2_ref > 0.0))
        throw std::invalid_argument("info_criterion: sigma2_ref must be positive");
    const SubfitSolution sol = cache.solve(spec, ws);
    const double n = cache.n();
    const double logn = std::log(n);
    return sol.rss + lambda_n * logn * sol.k * sigma2_ref - n * sigma2_ref +
           d * std::sqrt(n) * logn * sigma2_ref;
}

// Quantile with linear interpolation between order statistics (the default
// convention of most statistical software, type 7).
inline double quantile_type7(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0,1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
}

}  // namespace detail

// Penalized fit criterion whose removal ratios define the Parametricness
// Index: rss + lambda_n log(n) r_k s2 - n s2 + d sqrt(n) log(n) s2.
inline double info_criterion(const Dataset& data, const ModelSpec& spec, double sigma2_ref,
                             double lambda_n = 1.0, double d = 0.0) {
    GramCache cache(data);
    SubfitWorkspace ws(data.p());
    return detail::info_criterion_on(cache, spec, ws, sigma2_ref, lambda_n, d);
}

// Parametricness Index of the true specification: the smallest ratio of the
// criterion after removing one true regressor to the criterion of the truth.
// Single-regressor truths are parametric by construction with PI = n; an
// empty truth has no removable regressor and the index is not applicable.
// The variance reference defaults to the truth itself; pass ref_spec to use
// a different consistent specification.
inline PiReport pi_index(const Dataset& data, const ModelSpec& true_spec,
                         const ModelSpec* ref_spec = nullptr) {
    if (true_spec.p() != data.p()) throw std::invalid_argument("pi_index: spec size != p");
    PiReport report;
    report.edgp = true_spec;
    if (true_spec.empty()) return report;
    report.applicable = true;

    GramCache cache(data);
    SubfitWorkspace ws(data.p());
    const ModelSpec& ref = ref_spec != nullptr ? *ref_spec : true_spec;
    const SubfitSolution ref_sol = cache.solve(ref, ws);
    if (cache.n() <= ref_sol.k) throw std::invalid_argument("pi_index: no residual dof");
    const double sigma2_ref = ref_sol.rss / (cache.n() - ref_sol.k);
    if (!(sigma2_ref > 0.0)) return report;  // perfect reference fit: undefined ratios

    const double ic_base =
        detail::info_criterion_on(cache, true_spec, ws, sigma2_ref, 1.0, 0.0);
    if (!(ic_base > 0.0) || !std::isfinite(ic_base)) return report;
    report.valid = true;

    const int r0 = true_spec.count();
    double min_icr = std::numeric_limits<double>::infinity();
    for (int i : true_spec.indices()) {
        const double ic_drop =
            detail::info_criterion_on(cache, true_spec.flipped(i), ws, sigma2_ref, 1.0, 0.0);
        const double ratio = ic_drop / ic_base;
        report.icr[i] = ratio;
        min_icr = std::min(min_icr, ratio);
        if (ratio < kPiThreshold) {
            report.weak_regressors.push_back(i);
            report.edgp.set(i, false);
        }
    }
    report.pi = r0 == 1 ? static_cast<double>(cache.n()) : min_icr;
    report.classification = report.pi < kPiThreshold ? Parametricness::nonparametric
                                                     : Parametricness::parametric;
    return report;
}

struct DistributionSummary {
    double f_below = 0.0;  // empirical CDF at the 1.2 threshold
    double q01 = 0.0;
    double q10 = 0.0;
    double mean = 0.0;
    double q90 = 0.0;
    double q99 = 0.0;
};

struct EdgpSummary {
    bool applicable = false;
    int n_reps = 0;
    int n_valid = 0;
    DistributionSummary pi;
    std::map<int, DistributionSummary> icr;
    std::map<int, double> median_icr;
    ModelSpec edgp;
};

namespace detail {

inline DistributionSummary summarize(const std::vector<double>& values) {
    DistributionSummary s;
    if (values.empty()) return s;
    double below = 0.0, total = 0.0;
    for (double v : values) {
        below += v <= kPiThreshold;
        total += v;
    }
    s.f_below = below / static_cast<double>(values.size());
    s.mean = total / static_cast<double>(values.size());
    s.q01 = quantile_type7(values, 0.01);
    s.q10 = quantile_type7(values, 0.10);
    s.q90 = quantile_type7(values, 0.90);
    s.q99 = quantile_type7(values, 0.99);
    return s;
}

}  // namespace detail

// Monte Carlo distribution of PI and of the per-regressor criterion ratios,
// plus the design-level effective specification: the truth minus regressors
// whose median ratio falls below the threshold.
inline EdgpSummary edgp_distribution(const DgpConfig& config, const ExogenousPanel& panel,
                                     int n_reps, std::uint64_t seed) {
    if (n_reps < 100) throw std::invalid_argument("edgp_distribution: need at least 100 reps");
    EdgpSummary out;
    out.n_reps = n_reps;
    out.edgp = config.true_spec;
    if (config.true_spec.empty()) return out;
    out.applicable = true;

    std::vector<double> pis;
    std::map<int, std::vector<double>> ratios;
    for (int i : config.true_spec.indices()) ratios[i] = {};
    for (int rep = 0; rep < n_reps; ++rep) {
        SimulatedSample sample = simulate(config, panel, derive_seed(seed, rep));
        PiReport report = pi_index(sample.dataset, config.true_spec);
        if (!report.valid) continue;
        pis.push_back(report.pi);
        for (const auto& [i, r] : report.icr) ratios[i].push_back(r);
    }
    out.n_valid = static_cast<int>(pis.size());
    out.pi = detail::summarize(pis);
    for (auto& [i, values] : ratios) {
        out.icr[i] = detail::summarize(values);
        const double median = detail::quantile_type7(values, 0.5);
        out.median_icr[i] = median;
        if (median < kPiThreshold) out.edgp.set(i, false);
    }
    return out;
}

}  // namespace gsareg

#endif
