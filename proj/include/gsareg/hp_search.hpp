#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gsareg/battery.hpp"
#include "gsareg/dataset.hpp"
#include "gsareg/distributions.hpp"
#include "gsareg/model_spec.hpp"
#include "gsareg/regression.hpp"

namespace gsareg {

struct SearchTrace {
    int path_id = 0;                 // 1-based
    std::vector<ModelSpec> visited;  // full model first, terminal last
    ModelSpec terminal{1};
    double terminal_sigma_unb = 0.0;  // full-sample residual standard deviation
    bool block_applied = false;
};

struct HpResult {
    ModelSpec selected{1};
    std::vector<SearchTrace> traces;
};

namespace detail {

// Included columns ordered by ascending |t|, ties by index.
inline std::vector<int> ascending_t_order(const GramCache& cache, const ModelSpec& spec,
                                          SubfitWorkspace& ws, std::vector<double>& tbuf) {
    const std::vector<int> idx = spec.indices();
    tbuf.resize(idx.size());
    if (!idx.empty()) cache.solve(spec, ws, nullptr, tbuf.data());
    std::vector<int> order(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ta = std::abs(tbuf[a]), tb = std::abs(tbuf[b]);
        if (ta != tb) return ta < tb;
        return idx[a] < idx[b];
    });
    std::vector<int> cols(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) cols[i] = idx[order[i]];
    return cols;
}

inline double sigma_unb(const GramCache& cache, const ModelSpec& spec, SubfitWorkspace& ws) {
    const SubfitSolution s = cache.solve(spec, ws);
    const int dof = cache.n() - s.k;
    return dof > 0 ? std::sqrt(s.rss / dof) : std::numeric_limits<double>::infinity();
}

}  // namespace detail

// True iff the battery rejects the full model on the search window, i.e. the
// sample would be discarded before any search is attempted.
inline bool presearch_eliminate(const Dataset& data, double alpha) {
    BatteryContext ctx(data, 0.9);
    return ctx.run(data.full_spec(), alpha).rejected;
}

// General-to-specific search: the lowest-|t| regressors of the full model
// each seed an elimination path; a deletion must survive the test battery on
// the search window; each terminal then faces a joint deletion of its
// insignificant coefficients on the full sample; the winner has the smallest
// residual standard deviation.
inline HpResult hp_search(const Dataset& data, double alpha) {
    if (alpha <= 0.0 || alpha >= 1.0)
        throw std::invalid_argument("hp_search: alpha must lie in (0,1)");
    const int p = data.p();
    const int n = data.n();
    if (BatteryContext::window_length(n, 0.9) <= p)
        throw std::invalid_argument("hp_search: search window shorter than the full model");

    BatteryContext search_ctx(data, 0.9);
    BatteryContext final_ctx(data, 1.0);
    const GramCache& full_cache = final_ctx.window();
    SubfitWorkspace ws(p);
    std::vector<double> tbuf;

    const ModelSpec gum = data.full_spec();
    const std::vector<int> seeds =
        detail::ascending_t_order(search_ctx.window(), gum, ws, tbuf);
    const int n_paths = std::min<int>(10, p);

    HpResult result;
    result.traces.reserve(n_paths);
    for (int path = 0; path < n_paths; ++path) {
        SearchTrace trace;
        trace.path_id = path + 1;
        trace.visited.push_back(gum);
        ModelSpec current = gum;

        ModelSpec first = gum.flipped(seeds[path]);
        if (!search_ctx.run(first, alpha).rejected) {
            current = first;
            trace.visited.push_back(current);
            bool advanced = true;
            while (advanced && !current.empty()) {
                advanced = false;
                for (int col :
                     detail::ascending_t_order(search_ctx.window(), current, ws, tbuf)) {
                    ModelSpec candidate = current.flipped(col);
                    if (!search_ctx.run(candidate, alpha).rejected) {
                        current = candidate;
                        trace.visited.push_back(current);
                        advanced = true;
                        break;
                    }
                }
            }
        }

        // Joint deletion of every insignificant coefficient, full sample.
        if (!current.empty()) {
            const std::vector<int> idx = current.indices();
            tbuf.resize(idx.size());
            full_cache.solve(current, ws, nullptr, tbuf.data());
            const int dof = n - static_cast<int>(idx.size());
            ModelSpec blocked = current;
            for (std::size_t i = 0; i < idx.size(); ++i)
                if (t_two_sided_p(tbuf[i], dof).value > alpha) blocked.set(idx[i], false);
            if (blocked != current && !final_ctx.run(blocked, alpha).rejected) {
                current = blocked;
                trace.visited.push_back(current);
                trace.block_applied = true;
            }
        }

        trace.terminal = current;
        trace.terminal_sigma_unb = detail::sigma_unb(full_cache, current, ws);
        result.traces.push_back(std::move(trace));
    }

    int best = 0;
    for (int i = 1; i < n_paths; ++i) {
        const SearchTrace& a = result.traces[i];
        const SearchTrace& b = result.traces[best];
        if (a.terminal_sigma_unb < b.terminal_sigma_unb ||
            (a.terminal_sigma_unb == b.terminal_sigma_unb &&
             (a.terminal.count() < b.terminal.count() ||
              (a.terminal.count() == b.terminal.count() &&
               ModelSpec::lex_less(a.terminal, b.terminal)))))
            best = i;
    }
    result.selected = result.traces[best].terminal;
    return result;
}

}  // namespace gsareg
