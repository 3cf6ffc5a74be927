#ifndef GSAREG_HARNESS_HPP
#define GSAREG_HARNESS_HPP

#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "gsareg/dgp.hpp"
#include "gsareg/gsa_search.hpp"
#include "gsareg/hp_search.hpp"
#include "gsareg/parametricness.hpp"
#include "gsareg/sensitivity.hpp"
#include "gsareg/threading.hpp"

namespace gsareg {

enum class Algorithm { hp, gsa };
enum class Target { dgp, edgp };
enum class Category { c1, c2, c3 };

// Replication count and seed for the once-per-design effective-spec
// derivation. Pinned constants keep the effective target a property of the
// design and panel alone, independent of the experiment's master seed.
inline constexpr int kEdgpDerivationReps = 500;
inline constexpr std::uint64_t kEdgpDerivationSeed = 0x9e3779b97f4a7c15ULL;

struct AlgorithmSettings {
    Algorithm algorithm = Algorithm::gsa;
    GsaVariant variant;        // read when algorithm == gsa
    double hp_alpha = 4e-4;    // read when algorithm == hp
    bool presearch = true;     // hp only: discard samples whose GUM fails the battery
};

struct RepOutcome {
    std::uint64_t seed = 0;
    ModelSpec selected;
    Category category = Category::c3;
    bool discarded = false;
};

struct DgpRunReport {
    std::string dgp_id;
    Target target = Target::dgp;
    ModelSpec target_spec;
    int n_reps = 0;
    int n_used = 0;
    std::vector<RepOutcome> per_rep;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0;  // percentages over non-discarded reps
    double potency = 0.0, gauge = 0.0;
    bool potency_defined = false;
    double delta_t = 0.0, delta_st = 0.0;
    bool delta_defined = false;
};

struct RunOptions {
    Target target = Target::dgp;
    ErrorMode error_mode = ErrorMode::ar1_corrected;
    int n_threads = 1;
    bool compute_delta = true;
};

inline Category categorize(const ModelSpec& selected, const ModelSpec& truth) {
    if (selected.p() != truth.p())
        throw std::invalid_argument("categorize: spec lengths differ");
    bool equal = true, superset = true;
    for (int i = 0; i < truth.p(); ++i) {
        if (selected.test(i) != truth.test(i)) equal = false;
        if (truth.test(i) && !selected.test(i)) superset = false;
    }
    if (equal) return Category::c1;
    return superset ? Category::c2 : Category::c3;
}

struct PotencyGauge {
    double potency = 0.0;
    double gauge = 0.0;
    bool potency_defined = false;
};

// Retention-rate averages over the true and irrelevant column blocks.
inline PotencyGauge potency_gauge(const std::vector<ModelSpec>& selections,
                                  const ModelSpec& truth) {
    PotencyGauge out;
    if (selections.empty()) return out;
    const int p = truth.p();
    std::vector<double> retention(static_cast<std::size_t>(p), 0.0);
    for (const ModelSpec& s : selections) {
        if (s.p() != p) throw std::invalid_argument("potency_gauge: spec lengths differ");
        for (int i = 0; i < p; ++i) retention[static_cast<std::size_t>(i)] += s.test(i);
    }
    const int r0 = truth.count();
    double pot = 0.0, gau = 0.0;
    for (int i = 0; i < p; ++i) {
        const double rate = retention[static_cast<std::size_t>(i)] / selections.size();
        (truth.test(i) ? pot : gau) += rate;
    }
    if (r0 > 0) {
        out.potency = pot / r0;
        out.potency_defined = true;
    }
    if (p > r0) out.gauge = gau / (p - r0);
    return out;
}

namespace detail {

inline int canonical_dgp_index(const std::string& id) {
    const std::vector<std::string> ids = dgp_ids();
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == id) return static_cast<int>(i);
    throw std::invalid_argument("unknown dgp id '" + id + "'");
}

struct RepScratch {
    ModelSpec selected;
    bool discarded = false;
    double delta_t = 0.0;
    double delta_st = 0.0;
    bool has_delta = false;
};

}  // namespace detail

// Runs the configured selector over n_reps simulated samples of one design
// and scores every selection against the target specification.
inline DgpRunReport run_dgp_experiment(const DgpConfig& config, const ExogenousPanel& panel,
                                       const AlgorithmSettings& settings, int n_reps,
                                       std::uint64_t master_seed, const RunOptions& options) {
    if (n_reps < 1) throw std::invalid_argument("run_experiment: n_reps must be >= 1");
    DgpRunReport report;
    report.dgp_id = config.id;
    report.target = options.target;
    report.n_reps = n_reps;
    report.target_spec = config.true_spec;
    if (options.target == Target::edgp)
        report.target_spec =
            edgp_distribution(config, panel, kEdgpDerivationReps, kEdgpDerivationSeed).edgp;

    const int canon = detail::canonical_dgp_index(config.id);
    const bool want_delta = options.compute_delta && !report.target_spec.empty();
    std::vector<detail::RepScratch> scratch(static_cast<std::size_t>(n_reps));

    parallel_for(n_reps, options.n_threads, [&](int rep) {
        detail::RepScratch& slot = scratch[static_cast<std::size_t>(rep)];
        const std::uint64_t rep_seed =
            derive_seed(master_seed, static_cast<std::uint64_t>(canon), rep);
        SimulatedSample sample = simulate(config, panel, rep_seed);
        const Dataset& data = sample.dataset;

        if (settings.algorithm == Algorithm::hp) {
            if (settings.presearch && presearch_eliminate(data, settings.hp_alpha)) {
                slot.discarded = true;
                slot.selected = ModelSpec(data.p());
                return;
            }
            slot.selected = hp_search(data, settings.hp_alpha).selected;
        } else {
            slot.selected = gsa_search(data, settings.variant, derive_seed(rep_seed, 1)).chosen;
        }

        if (want_delta) {
            GramCache cache(data);
            SubfitWorkspace ws(data.p());
            Eigen::VectorXd t_stats(data.p());
            cache.solve(ModelSpec::full(data.p()), ws, nullptr, t_stats.data());
            slot.delta_t = covering_delta(rank_regressors(t_stats.cwiseAbs()),
                                          report.target_spec, RankMethod::t_rank)
                               .delta;
            SensitivityProfile prof =
                estimate_st(data, kDefaultSensitivityDraws, derive_seed(rep_seed, 2));
            slot.delta_st =
                covering_delta(rank_regressors(prof.s_t), report.target_spec,
                               RankMethod::st_rank)
                    .delta;
            slot.has_delta = true;
        }
    });

    report.per_rep.resize(static_cast<std::size_t>(n_reps));
    int counts[3] = {0, 0, 0};
    std::vector<ModelSpec> kept;
    kept.reserve(static_cast<std::size_t>(n_reps));
    double delta_t_sum = 0.0, delta_st_sum = 0.0;
    int delta_n = 0;
    for (int rep = 0; rep < n_reps; ++rep) {
        const detail::RepScratch& slot = scratch[static_cast<std::size_t>(rep)];
        RepOutcome& out = report.per_rep[static_cast<std::size_t>(rep)];
        out.seed = derive_seed(master_seed, static_cast<std::uint64_t>(canon), rep);
        out.selected = slot.selected;
        out.discarded = slot.discarded;
        if (slot.discarded) continue;
        out.category = categorize(slot.selected, report.target_spec);
        ++counts[static_cast<int>(out.category)];
        kept.push_back(slot.selected);
        if (slot.has_delta) {
            delta_t_sum += slot.delta_t;
            delta_st_sum += slot.delta_st;
            ++delta_n;
        }
    }
    report.n_used = static_cast<int>(kept.size());
    if (report.n_used > 0) {
        report.c1 = 100.0 * counts[0] / report.n_used;
        report.c2 = 100.0 * counts[1] / report.n_used;
        report.c3 = 100.0 * counts[2] / report.n_used;
        PotencyGauge pg = potency_gauge(kept, report.target_spec);
        report.potency = pg.potency;
        report.potency_defined = pg.potency_defined;
        report.gauge = pg.gauge;
    }
    if (delta_n > 0) {
        report.delta_t = delta_t_sum / delta_n;
        report.delta_st = delta_st_sum / delta_n;
        report.delta_defined = true;
    }
    return report;
}

inline std::vector<DgpRunReport> run_experiment(const std::vector<std::string>& dgp_ids_arg,
                                                const ExogenousPanel& panel,
                                                const AlgorithmSettings& settings, int n_reps,
                                                std::uint64_t master_seed,
                                                const RunOptions& options = {}) {
    std::vector<DgpRunReport> reports;
    reports.reserve(dgp_ids_arg.size());
    for (const std::string& id : dgp_ids_arg)
        reports.push_back(run_dgp_experiment(dgp_config(id, options.error_mode), panel,
                                             settings, n_reps, master_seed, options));
    return reports;
}

struct GridPoint {
    double value = 0.0;
    double mean_c1 = 0.0;
    double mean_c2 = 0.0;
    double mean_c3 = 0.0;
};

struct GridResult {
    std::vector<GridPoint> curve;
    int argmax = -1;  // index of the highest mean C1
};

// Sweeps the active tuning knob (alpha for HP and the simple tier, phi for
// the adaptive tiers) over the given values, re-running the same seeded
// samples at every point so curves are directly comparable.
inline GridResult grid_search(const std::vector<std::string>& dgp_ids_arg,
                              const ExogenousPanel& panel, AlgorithmSettings settings,
                              const std::vector<double>& grid, int n_reps,
                              std::uint64_t master_seed, const RunOptions& options = {}) {
    if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
    GridResult result;
    result.curve.reserve(grid.size());
    for (double value : grid) {
        if (settings.algorithm == Algorithm::hp)
            settings.hp_alpha = value;
        else if (settings.variant.tier == GsaTier::simple)
            settings.variant.alpha = value;
        else
            settings.variant.phi = value;
        const std::vector<DgpRunReport> reports =
            run_experiment(dgp_ids_arg, panel, settings, n_reps, master_seed, options);
        GridPoint point;
        point.value = value;
        for (const DgpRunReport& r : reports) {
            point.mean_c1 += r.c1;
            point.mean_c2 += r.c2;
            point.mean_c3 += r.c3;
        }
        point.mean_c1 /= reports.size();
        point.mean_c2 /= reports.size();
        point.mean_c3 /= reports.size();
        result.curve.push_back(point);
        if (result.argmax < 0 || point.mean_c1 > result.curve[result.argmax].mean_c1)
            result.argmax = static_cast<int>(result.curve.size()) - 1;
    }
    return result;
}

namespace detail {

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline std::string tier_name(GsaTier tier) {
    switch (tier) {
        case GsaTier::simple: return "simple";
        case GsaTier::no_skip: return "no_skip";
        default: return "full";
    }
}

inline std::string q_kind_name(QKind kind) {
    switch (kind) {
        case QKind::bic: return "bic";
        case QKind::aic: return "aic";
        default: return "hp";
    }
}

struct CsvFields {
    std::string algorithm, tier, alpha, phi;
};

inline CsvFields settings_fields(const AlgorithmSettings& s) {
    CsvFields f;
    if (s.algorithm == Algorithm::hp) {
        f.algorithm = "hp";
        f.tier = "na";
        f.alpha = format_number(s.hp_alpha);
        f.phi = "na";
    } else {
        f.algorithm = "gsa";
        f.tier = tier_name(s.variant.tier);
        if (s.variant.tier == GsaTier::simple) {
            f.alpha = format_number(s.variant.alpha);
            f.phi = "na";
        } else {
            f.alpha = "na";
            f.phi = format_number(s.variant.phi);
        }
    }
    return f;
}

}  // namespace detail

// One row per design plus a cross-design mean row; undefined cells print as
// "na". Output depends only on the reports and settings, never on schedule.
inline void write_results_csv(std::ostream& os, const std::vector<DgpRunReport>& reports,
                              const AlgorithmSettings& settings, std::uint64_t master_seed) {
    const detail::CsvFields f = detail::settings_fields(settings);
    os << "dgp,algorithm,tier,alpha,phi,target,c1,c2,c3,potency,gauge,delta_t,delta_st,"
          "n_reps,master_seed\n";
    auto row = [&](const std::string& dgp, Target target, double c1, double c2, double c3,
                   bool pot_def, double pot, double gauge, bool delta_def, double dt,
                   double dst, int n_reps) {
        os << dgp << ',' << f.algorithm << ',' << f.tier << ',' << f.alpha << ',' << f.phi
           << ',' << (target == Target::dgp ? "dgp" : "edgp") << ','
           << detail::format_number(c1) << ',' << detail::format_number(c2) << ','
           << detail::format_number(c3) << ','
           << (pot_def ? detail::format_number(pot) : "na") << ','
           << detail::format_number(gauge) << ','
           << (delta_def ? detail::format_number(dt) : "na") << ','
           << (delta_def ? detail::format_number(dst) : "na") << ',' << n_reps << ','
           << master_seed << '\n';
    };
    double c1 = 0, c2 = 0, c3 = 0, pot = 0, gauge = 0, dt = 0, dst = 0;
    int pot_n = 0, delta_n = 0, reps_total = 0;
    for (const DgpRunReport& r : reports) {
        row(r.dgp_id, r.target, r.c1, r.c2, r.c3, r.potency_defined, r.potency, r.gauge,
            r.delta_defined, r.delta_t, r.delta_st, r.n_reps);
        c1 += r.c1;
        c2 += r.c2;
        c3 += r.c3;
        gauge += r.gauge;
        reps_total += r.n_reps;
        if (r.potency_defined) {
            pot += r.potency;
            ++pot_n;
        }
        if (r.delta_defined) {
            dt += r.delta_t;
            dst += r.delta_st;
            ++delta_n;
        }
    }
    if (reports.size() > 1) {
        const double m = static_cast<double>(reports.size());
        row("all", reports.front().target, c1 / m, c2 / m, c3 / m, pot_n > 0,
            pot_n > 0 ? pot / pot_n : 0.0, gauge / m, delta_n > 0,
            delta_n > 0 ? dt / delta_n : 0.0, delta_n > 0 ? dst / delta_n : 0.0, reps_total);
    }
}

namespace detail {

// Every knob is echoed, active or not, so a results file fully identifies the
// run that produced it. Thread count is omitted: it never affects results.
inline nlohmann::ordered_json settings_json(const AlgorithmSettings& settings,
                                            std::uint64_t master_seed, int n_reps,
                                            const RunOptions& options) {
    nlohmann::ordered_json j;
    j["algorithm"] = settings.algorithm == Algorithm::hp ? "hp" : "gsa";
    j["hp_alpha"] = settings.hp_alpha;
    j["presearch"] = settings.presearch;
    j["tier"] = tier_name(settings.variant.tier);
    j["alpha"] = settings.variant.alpha;
    j["phi"] = settings.variant.phi;
    j["gsa_draws"] = settings.variant.n_draws;
    j["q"] = q_kind_name(settings.variant.q_kind);
    j["target"] = options.target == Target::dgp ? "dgp" : "edgp";
    j["error_mode"] = options.error_mode == ErrorMode::ar1_corrected ? "ar1" : "ma1";
    j["compute_delta"] = options.compute_delta;
    j["n_reps"] = n_reps;
    j["master_seed"] = master_seed;
    return j;
}

}  // namespace detail

inline void write_results_json(std::ostream& os, const std::vector<DgpRunReport>& reports,
                               const AlgorithmSettings& settings, std::uint64_t master_seed,
                               const RunOptions& options) {
    nlohmann::ordered_json j;
    j["config"] = detail::settings_json(
        settings, master_seed, reports.empty() ? 0 : reports.front().n_reps, options);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const DgpRunReport& r : reports) {
        nlohmann::ordered_json row;
        row["dgp"] = r.dgp_id;
        row["target_spec"] = r.target_spec.indices();
        row["n_reps"] = r.n_reps;
        row["n_used"] = r.n_used;
        row["c1"] = r.c1;
        row["c2"] = r.c2;
        row["c3"] = r.c3;
        if (r.potency_defined) row["potency"] = r.potency;
        row["gauge"] = r.gauge;
        if (r.delta_defined) {
            row["delta_t"] = r.delta_t;
            row["delta_st"] = r.delta_st;
        }
        rows.push_back(std::move(row));
    }
    j["results"] = std::move(rows);
    os << j.dump(2) << '\n';
}

inline void write_grid_json(std::ostream& os, const GridResult& grid,
                            const AlgorithmSettings& settings, std::uint64_t master_seed,
                            int n_reps, const RunOptions& options) {
    nlohmann::ordered_json j;
    j["config"] = detail::settings_json(settings, master_seed, n_reps, options);
    nlohmann::ordered_json curve = nlohmann::ordered_json::array();
    for (const GridPoint& pt : grid.curve) {
        nlohmann::ordered_json row;
        row["value"] = pt.value;
        row["mean_c1"] = pt.mean_c1;
        row["mean_c2"] = pt.mean_c2;
        row["mean_c3"] = pt.mean_c3;
        curve.push_back(std::move(row));
    }
    j["curve"] = std::move(curve);
    j["argmax"] = grid.argmax;
    os << j.dump(2) << '\n';
}

inline void write_grid_csv(std::ostream& os, const GridResult& grid,
                           const AlgorithmSettings& settings, std::uint64_t master_seed) {
    const detail::CsvFields f = detail::settings_fields(settings);
    const std::string knob = settings.algorithm == Algorithm::gsa &&
                                     settings.variant.tier != GsaTier::simple
                                 ? "phi"
                                 : "alpha";
    os << "algorithm,tier,parameter,value,mean_c1,mean_c2,mean_c3,is_argmax,master_seed\n";
    for (std::size_t i = 0; i < grid.curve.size(); ++i) {
        const GridPoint& pt = grid.curve[i];
        os << f.algorithm << ',' << f.tier << ',' << knob << ','
           << detail::format_number(pt.value) << ',' << detail::format_number(pt.mean_c1)
           << ',' << detail::format_number(pt.mean_c2) << ','
           << detail::format_number(pt.mean_c3) << ','
           << (static_cast<int>(i) == grid.argmax ? 1 : 0) << ',' << master_seed << '\n';
    }
}

}  // namespace gsareg

#endif
