#ifndef GSAREG_CLI_HPP
#define GSAREG_CLI_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gsareg/harness.hpp"

namespace gsareg {

enum class Command { simulate, rank, select, pi, experiment, grid };

// Fully resolved invocation. Everything the run produces is a function of
// this struct alone; rendering it back to flags and re-parsing reproduces it.
struct RunConfig {
    Command command = Command::experiment;
    std::vector<std::string> dgps = {"all"};
    Algorithm algorithm = Algorithm::gsa;
    GsaTier tier = GsaTier::full;
    double alpha = 0.0371;
    double phi = 0.3;
    int gsa_draws = kDefaultSensitivityDraws;
    QKind q = QKind::bic;
    int reps = 1000;
    std::uint64_t seed = 1;
    std::string panel_csv;
    std::uint64_t panel_seed = 2024;
    ErrorMode error_mode = ErrorMode::ar1_corrected;
    Target target = Target::dgp;
    bool presearch = true;
    std::vector<double> grid;
    std::string out = ".";
    int threads = 0;  // 0 = machine parallelism
    bool trace = false;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline const std::map<std::string, Command>& command_names() {
    static const std::map<std::string, Command> m = {
        {"simulate", Command::simulate}, {"rank", Command::rank},
        {"select", Command::select},     {"pi", Command::pi},
        {"experiment", Command::experiment}, {"grid", Command::grid}};
    return m;
}

inline std::string command_name(Command c) {
    for (const auto& [name, value] : command_names())
        if (value == c) return name;
    throw std::logic_error("unnamed command");
}

// The full option set is attached to every subcommand; unused knobs are
// simply ignored by the dispatcher, which keeps renders uniform.
inline void attach_options(CLI::App* sub, RunConfig& config) {
    sub->add_option("--dgp", config.dgps,
                    "Design ids to run ('all' or ids from the catalog; repeatable)")
        ->check(CLI::IsMember([] {
            std::vector<std::string> allowed = dgp_ids();
            allowed.push_back("all");
            return allowed;
        }()));
    sub->add_option("--algorithm", config.algorithm, "Search algorithm")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Algorithm>{{"hp", Algorithm::hp}, {"gsa", Algorithm::gsa}}));
    sub->add_option("--tier", config.tier, "GSA tier")
        ->transform(CLI::CheckedTransformer(std::map<std::string, GsaTier>{
            {"simple", GsaTier::simple}, {"no_skip", GsaTier::no_skip},
            {"full", GsaTier::full}}));
    sub->add_option("--alpha", config.alpha, "Fixed test level (HP and simple tier)")
        ->check(CLI::Range(1e-12, 1.0 - 1e-12));
    sub->add_option("--phi", config.phi, "Adaptive level interpolation weight")
        ->check(CLI::Range(1e-12, 1.0 - 1e-12));
    sub->add_option("--gsa-draws", config.gsa_draws, "Monte Carlo draws per sensitivity run")
        ->check(CLI::Range(2, 1 << 24));
    sub->add_option("--q", config.q, "Criterion fed to the sensitivity machinery")
        ->transform(CLI::CheckedTransformer(std::map<std::string, QKind>{
            {"bic", QKind::bic}, {"aic", QKind::aic}, {"hp", QKind::hp}}));
    sub->add_option("--reps", config.reps, "Replications")->check(CLI::Range(1, 1 << 30));
    sub->add_option("--seed", config.seed, "Master seed");
    CLI::Option* csv =
        sub->add_option("--panel-csv", config.panel_csv, "Exogenous panel from a CSV file");
    sub->add_option("--panel-seed", config.panel_seed, "Synthesize the exogenous panel")
        ->excludes(csv);
    sub->add_option("--error-mode", config.error_mode, "Error recursion variant")
        ->transform(CLI::CheckedTransformer(std::map<std::string, ErrorMode>{
            {"ar1", ErrorMode::ar1_corrected}, {"ma1", ErrorMode::ma1_original}}));
    sub->add_option("--target", config.target, "Score selections against this spec")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Target>{{"dgp", Target::dgp}, {"edgp", Target::edgp}}));
    sub->add_option("--presearch", config.presearch, "HP battery pre-search discards")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, bool>{{"on", true}, {"off", false}}));
    sub->add_option("--grid", config.grid, "Grid points to sweep (default: knob-specific)")
        ->check(CLI::Range(1e-12, 1.0 - 1e-12));
    sub->add_option("--out", config.out, "Output directory");
    sub->add_option("--threads", config.threads, "Worker threads (0 = machine parallelism)")
        ->check(CLI::Range(0, 4096));
    sub->add_flag("--trace", config.trace, "Write per-replication selections");
}

inline std::string format_full(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void build_app(CLI::App& app, RunConfig& config) {
    app.description("Regression subset-selection laboratory");
    app.require_subcommand(1);
    for (const auto& [name, value] : detail::command_names()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->parse_complete_callback([&config, v = value] { config.command = v; });
        detail::attach_options(sub, config);
    }
}

inline RunConfig parse_cli(const std::vector<std::string>& args) {
    RunConfig config;
    CLI::App app{"", "gsareg"};
    build_app(app, config);
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("gsareg");
    for (const std::string& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
    return config;
}

inline std::string usage_text() {
    RunConfig config;
    CLI::App app{"", "gsareg"};
    build_app(app, config);
    return app.help();
}

// Canonical flag sequence: parsing it reproduces the config exactly.
inline std::vector<std::string> render_cli(const RunConfig& config) {
    std::vector<std::string> args;
    args.push_back(detail::command_name(config.command));
    for (const std::string& id : config.dgps) {
        args.push_back("--dgp");
        args.push_back(id);
    }
    args.push_back("--algorithm");
    args.push_back(config.algorithm == Algorithm::hp ? "hp" : "gsa");
    args.push_back("--tier");
    args.push_back(detail::tier_name(config.tier));
    args.push_back("--alpha");
    args.push_back(detail::format_full(config.alpha));
    args.push_back("--phi");
    args.push_back(detail::format_full(config.phi));
    args.push_back("--gsa-draws");
    args.push_back(std::to_string(config.gsa_draws));
    args.push_back("--q");
    args.push_back(detail::q_kind_name(config.q));
    args.push_back("--reps");
    args.push_back(std::to_string(config.reps));
    args.push_back("--seed");
    args.push_back(std::to_string(config.seed));
    if (!config.panel_csv.empty()) {
        args.push_back("--panel-csv");
        args.push_back(config.panel_csv);
    } else {
        args.push_back("--panel-seed");
        args.push_back(std::to_string(config.panel_seed));
    }
    args.push_back("--error-mode");
    args.push_back(config.error_mode == ErrorMode::ar1_corrected ? "ar1" : "ma1");
    args.push_back("--target");
    args.push_back(config.target == Target::dgp ? "dgp" : "edgp");
    args.push_back("--presearch");
    args.push_back(config.presearch ? "on" : "off");
    for (double v : config.grid) {
        args.push_back("--grid");
        args.push_back(detail::format_full(v));
    }
    args.push_back("--out");
    args.push_back(config.out);
    args.push_back("--threads");
    args.push_back(std::to_string(config.threads));
    if (config.trace) args.push_back("--trace");
    return args;
}

namespace detail {

inline ExogenousPanel resolve_panel(const RunConfig& config) {
    if (!config.panel_csv.empty()) return load_panel(config.panel_csv);
    return synthesize_panel(config.panel_seed, design::kSampleLength);
}

inline std::vector<std::string> resolve_dgps(const RunConfig& config) {
    for (const std::string& id : config.dgps)
        if (id == "all") return dgp_ids();
    return config.dgps;
}

inline std::string single_dgp(const RunConfig& config) {
    const std::vector<std::string> ids = resolve_dgps(config);
    if (ids.size() != 1)
        throw std::invalid_argument("--dgp: " + command_name(config.command) +
                                    " takes exactly one design id");
    return ids.front();
}

inline AlgorithmSettings to_settings(const RunConfig& config) {
    AlgorithmSettings s;
    s.algorithm = config.algorithm;
    s.hp_alpha = config.alpha;
    s.presearch = config.presearch;
    s.variant.tier = config.tier;
    s.variant.alpha = config.alpha;
    s.variant.phi = config.phi;
    s.variant.n_draws = config.gsa_draws;
    s.variant.q_kind = config.q;
    return s;
}

inline RunOptions to_options(const RunConfig& config) {
    RunOptions o;
    o.target = config.target;
    o.error_mode = config.error_mode;
    o.n_threads = config.threads;
    return o;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    return os;
}

inline std::string join_indices(const ModelSpec& spec) {
    std::string out;
    for (int i : spec.indices()) {
        if (!out.empty()) out += ';';
        out += std::to_string(i);
    }
    return out;
}

inline const char* category_name(Category c) {
    switch (c) {
        case Category::c1: return "c1";
        case Category::c2: return "c2";
        default: return "c3";
    }
}

inline void write_trace_csv(std::ostream& os, const std::vector<DgpRunReport>& reports) {
    os << "dgp,rep,seed,discarded,category,selected\n";
    for (const DgpRunReport& r : reports)
        for (std::size_t rep = 0; rep < r.per_rep.size(); ++rep) {
            const RepOutcome& o = r.per_rep[rep];
            os << r.dgp_id << ',' << rep << ',' << o.seed << ',' << (o.discarded ? 1 : 0)
               << ',' << (o.discarded ? "na" : category_name(o.category)) << ','
               << join_indices(o.selected) << '\n';
        }
}

inline std::vector<double> default_grid(const RunConfig& config) {
    if (!config.grid.empty()) return config.grid;
    if (config.algorithm == Algorithm::gsa && config.tier != GsaTier::simple)
        return {0.1, 0.2, 0.3, 0.4, 0.5};
    return {1e-5, 1e-4, 1e-3, 1e-2, 0.0371, 0.1};
}

inline int run_simulate(const RunConfig& config, std::ostream& log) {
    const DgpConfig dgp = dgp_config(single_dgp(config), config.error_mode);
    const SimulatedSample sample = simulate(dgp, resolve_panel(config), config.seed);
    const std::filesystem::path path = std::filesystem::path(config.out) / "sample.csv";
    std::ofstream os = open_output(path);
    os << 'y';
    for (int j = 0; j < sample.dataset.p(); ++j) os << ",x" << j;
    os << '\n';
    char buf[40];
    for (int t = 0; t < sample.dataset.n(); ++t) {
        std::snprintf(buf, sizeof(buf), "%.17g", sample.dataset.y_raw()[t]);
        os << buf;
        for (int j = 0; j < sample.dataset.p(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", sample.dataset.X_raw()(t, j));
            os << ',' << buf;
        }
        os << '\n';
    }
    log << "wrote " << path.string() << " (" << sample.dataset.n() << " rows)\n";
    return 0;
}

inline int run_rank(const RunConfig& config, std::ostream& log) {
    const DgpConfig dgp = dgp_config(single_dgp(config), config.error_mode);
    const SimulatedSample sample = simulate(dgp, resolve_panel(config), config.seed);
    const Dataset& data = sample.dataset;

    GramCache cache(data);
    SubfitWorkspace ws(data.p());
    Eigen::VectorXd t_stats(data.p());
    cache.solve(ModelSpec::full(data.p()), ws, nullptr, t_stats.data());
    const std::vector<int> t_order = rank_regressors(t_stats.cwiseAbs());
    const SensitivityProfile prof =
        estimate_st(data, config.gsa_draws, derive_seed(config.seed, 1), config.q);
    const std::vector<int> st_order = rank_regressors(prof.s_t);

    std::vector<int> t_pos(static_cast<std::size_t>(data.p()));
    std::vector<int> st_pos(static_cast<std::size_t>(data.p()));
    for (int pos = 0; pos < data.p(); ++pos) {
        t_pos[static_cast<std::size_t>(t_order[pos])] = pos + 1;
        st_pos[static_cast<std::size_t>(st_order[pos])] = pos + 1;
    }

    const std::filesystem::path path = std::filesystem::path(config.out) / "ranking.csv";
    std::ofstream os = open_output(path);
    os << "column,abs_t,t_rank,s_t,st_rank\n";
    for (int j = 0; j < data.p(); ++j)
        os << 'x' << j << ',' << format_number(std::abs(t_stats[j])) << ','
           << t_pos[static_cast<std::size_t>(j)] << ',' << format_number(prof.s_t[j]) << ','
           << st_pos[static_cast<std::size_t>(j)] << '\n';
    log << "wrote " << path.string() << '\n';
    return 0;
}

inline int run_select(const RunConfig& config, std::ostream& log) {
    const DgpConfig dgp = dgp_config(single_dgp(config), config.error_mode);
    const SimulatedSample sample = simulate(dgp, resolve_panel(config), config.seed);
    const Dataset& data = sample.dataset;

    nlohmann::ordered_json j;
    j["config"] = settings_json(to_settings(config), config.seed, 1, to_options(config));
    j["dgp"] = dgp.id;
    j["true_spec"] = dgp.true_spec.indices();
    ModelSpec chosen(data.p());
    if (config.algorithm == Algorithm::hp) {
        const bool discarded =
            config.presearch && presearch_eliminate(data, config.alpha);
        j["discarded"] = discarded;
        if (!discarded) {
            chosen = hp_search(data, config.alpha).selected;
            j["selected"] = chosen.indices();
        }
    } else {
        GsaVariant variant = to_settings(config).variant;
        const SelectionOutcome outcome =
            gsa_search(data, variant, derive_seed(config.seed, 1));
        chosen = outcome.chosen;
        j["selected"] = chosen.indices();
        j["by_t"] = outcome.by_t.indices();
        j["by_st"] = outcome.by_st.indices();
        j["alpha_used"] = outcome.alpha_used;
        j["tie_broken_by_bic"] = outcome.tie_broken_by_bic;
    }
    const std::filesystem::path path = std::filesystem::path(config.out) / "selection.json";
    std::ofstream os = open_output(path);
    os << j.dump(2) << '\n';
    log << "selected {" << join_indices(chosen) << "} -> " << path.string() << '\n';
    return 0;
}

inline void summary_row(std::ostream& os, const std::string& label,
                        const DistributionSummary& s) {
    os << label << ',' << format_number(s.f_below) << ',' << format_number(s.q01) << ','
       << format_number(s.q10) << ',' << format_number(s.mean) << ','
       << format_number(s.q90) << ',' << format_number(s.q99) << '\n';
}

inline int run_pi(const RunConfig& config, std::ostream& log) {
    const DgpConfig dgp = dgp_config(single_dgp(config), config.error_mode);
    const EdgpSummary summary =
        edgp_distribution(dgp, resolve_panel(config), config.reps, config.seed);

    const std::filesystem::path csv_path = std::filesystem::path(config.out) / "pi.csv";
    std::ofstream os = open_output(csv_path);
    os << "quantity,f_below_1.2,q01,q10,mean,q90,q99\n";
    if (summary.applicable) {
        summary_row(os, "pi", summary.pi);
        for (const auto& [column, dist] : summary.icr)
            summary_row(os, "icr_x" + std::to_string(column), dist);
    }

    nlohmann::ordered_json j;
    j["config"] = settings_json(to_settings(config), config.seed, config.reps,
                                to_options(config));
    j["dgp"] = dgp.id;
    j["applicable"] = summary.applicable;
    j["n_valid"] = summary.n_valid;
    j["edgp"] = summary.edgp.indices();
    if (summary.applicable) {
        nlohmann::ordered_json medians;
        for (const auto& [column, median] : summary.median_icr)
            medians["x" + std::to_string(column)] = median;
        j["median_icr"] = std::move(medians);
    }
    const std::filesystem::path json_path = std::filesystem::path(config.out) / "pi.json";
    std::ofstream js = open_output(json_path);
    js << j.dump(2) << '\n';
    log << "wrote " << csv_path.string() << " and " << json_path.string() << '\n';
    return 0;
}

inline int run_experiment_cmd(const RunConfig& config, std::ostream& log) {
    const AlgorithmSettings settings = to_settings(config);
    const RunOptions options = to_options(config);
    const std::vector<DgpRunReport> reports = run_experiment(
        resolve_dgps(config), resolve_panel(config), settings, config.reps, config.seed,
        options);

    const std::filesystem::path dir(config.out);
    std::ofstream csv = open_output(dir / "results.csv");
    write_results_csv(csv, reports, settings, config.seed);
    std::ofstream js = open_output(dir / "results.json");
    write_results_json(js, reports, settings, config.seed, options);
    if (config.trace) {
        std::ofstream trace = open_output(dir / "trace.csv");
        write_trace_csv(trace, reports);
    }
    log << "wrote " << (dir / "results.csv").string() << " and "
        << (dir / "results.json").string() << '\n';
    return 0;
}

inline int run_grid_cmd(const RunConfig& config, std::ostream& log) {
    const AlgorithmSettings settings = to_settings(config);
    const RunOptions options = to_options(config);
    const GridResult grid =
        grid_search(resolve_dgps(config), resolve_panel(config), settings,
                    default_grid(config), config.reps, config.seed, options);

    const std::filesystem::path dir(config.out);
    std::ofstream csv = open_output(dir / "grid.csv");
    write_grid_csv(csv, grid, settings, config.seed);
    std::ofstream js = open_output(dir / "grid.json");
    write_grid_json(js, grid, settings, config.seed, config.reps, options);
    log << "wrote " << (dir / "grid.csv").string() << " and " << (dir / "grid.json").string()
        << '\n';
    return 0;
}

}  // namespace detail

inline int run_cli(const RunConfig& config, std::ostream& log) {
    std::filesystem::create_directories(config.out);
    switch (config.command) {
        case Command::simulate: return detail::run_simulate(config, log);
        case Command::rank: return detail::run_rank(config, log);
        case Command::select: return detail::run_select(config, log);
        case Command::pi: return detail::run_pi(config, log);
        case Command::experiment: return detail::run_experiment_cmd(config, log);
        default: return detail::run_grid_cmd(config, log);
    }
}

}  // namespace gsareg

#endif
