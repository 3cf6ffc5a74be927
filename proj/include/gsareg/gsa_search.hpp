#ifndef GSAREG_GSA_SEARCH_HPP
#define GSAREG_GSA_SEARCH_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "gsareg/regression.hpp"
#include "gsareg/sensitivity.hpp"

namespace gsareg {

enum class GsaTier { simple, no_skip, full };

// The three published variants share one knob each: the simple tier runs at a
// fixed level, the adaptive tiers derive their level from the sensitivity
// profile through phi.
struct GsaVariant {
    GsaTier tier = GsaTier::full;
    double alpha = 0.0371;
    double phi = 0.3;
    int n_draws = kDefaultSensitivityDraws;
    QKind q_kind = QKind::bic;
};

struct SelectionOutcome {
    ModelSpec chosen;
    ModelSpec by_t;
    ModelSpec by_st;
    double alpha_used = 0.0;
    bool tie_broken_by_bic = false;
};

namespace detail {

inline void check_ordering(const std::vector<int>& ordering, int p) {
    if (static_cast<int>(ordering.size()) != p)
        throw std::invalid_argument("bottom_up: ordering length != p");
    std::vector<char> seen(static_cast<std::size_t>(p), 0);
    for (int i : ordering) {
        if (i < 0 || i >= p || seen[static_cast<std::size_t>(i)])
            throw std::invalid_argument("bottom_up: ordering is not a permutation");
        seen[static_cast<std::size_t>(i)] = 1;
    }
}

inline ModelSpec bottom_up_on(const GramCache& cache, const std::vector<int>& ordering,
                              double alpha, SubfitWorkspace& ws) {
    ModelSpec spec(cache.p());
    if (f_test_vs_gum(cache, spec, ws).p.value >= alpha) return spec;
    for (int idx : ordering) {
        spec.set(idx);
        if (f_test_vs_gum(cache, spec, ws).p.value >= alpha) return spec;
    }
    return spec;
}

inline ModelSpec skip_refine_on(const GramCache& cache, ModelSpec spec, double alpha,
                                SubfitWorkspace& ws) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < spec.p(); ++i) {
            if (!spec.test(i)) continue;
            ModelSpec trial = spec.flipped(i);
            if (f_test_vs_gum(cache, trial, ws).p.value >= alpha) {
                spec = trial;
                changed = true;
            }
        }
    }
    return spec;
}

inline double adaptive_alpha_on(const GramCache& cache, const SensitivityProfile& profile,
                                double phi, SubfitWorkspace& ws) {
    if (!(phi > 0.0 && phi < 1.0))
        throw std::invalid_argument("adaptive_alpha: phi must lie in (0, 1)");
    const int p = cache.p();
    if (profile.s_t.size() != p)
        throw std::invalid_argument("adaptive_alpha: profile size != p");
    const double p_low = f_test_vs_gum(cache, ModelSpec(p), ws).p.value;
    ModelSpec high(p);
    for (int i = 0; i < p; ++i)
        if (profile.s_t[i] > 0.01) high.set(i);
    const double p_high = high.empty() ? p_low : f_test_vs_gum(cache, high, ws).p.value;
    return p_low + phi * (p_high - p_low);
}

// Fewest regressors wins; on a count tie the lower BIC wins; on a double tie
// the sensitivity-ranked model is kept.
inline std::pair<ModelSpec, bool> choose_between(const GramCache& cache, const ModelSpec& by_t,
                                                 const ModelSpec& by_st, SubfitWorkspace& ws) {
    if (by_t.count() < by_st.count()) return {by_t, false};
    if (by_st.count() < by_t.count()) return {by_st, false};
    const double bic_t = criterion_value(cache, by_t, QKind::bic, ws);
    const double bic_st = criterion_value(cache, by_st, QKind::bic, ws);
    if (bic_t < bic_st) return {by_t, true};
    if (bic_st < bic_t) return {by_st, true};
    return {by_st, false};
}

}  // namespace detail

// Grows a candidate model from the empty spec along the given ranking and
// stops at the first candidate the F test against the GUM does not reject.
inline ModelSpec bottom_up(const Dataset& data, const std::vector<int>& ordering, double alpha) {
    detail::check_ordering(ordering, data.p());
    GramCache cache(data);
    SubfitWorkspace ws(data.p());
    return detail::bottom_up_on(cache, ordering, alpha, ws);
}

inline double adaptive_alpha(const Dataset& data, const SensitivityProfile& profile, double phi) {
    GramCache cache(data);
    SubfitWorkspace ws(data.p());
    return detail::adaptive_alpha_on(cache, profile, phi, ws);
}

// Tries removing each included regressor in ascending column order, keeping a
// removal whenever the reduced model still survives the F test, and repeats
// until a full pass removes nothing.
inline ModelSpec skip_refine(const Dataset& data, const ModelSpec& spec, double alpha) {
    if (spec.p() != data.p()) throw std::invalid_argument("skip_refine: spec size != p");
    GramCache cache(data);
    SubfitWorkspace ws(data.p());
    return detail::skip_refine_on(cache, spec, alpha, ws);
}

inline SelectionOutcome gsa_search(const Dataset& data, const GsaVariant& variant,
                                   std::uint64_t gsa_seed) {
    if (variant.tier == GsaTier::simple) {
        if (!(variant.alpha > 0.0 && variant.alpha < 1.0))
            throw std::invalid_argument("gsa_search: alpha must lie in (0, 1)");
    } else if (!(variant.phi > 0.0 && variant.phi < 1.0)) {
        throw std::invalid_argument("gsa_search: phi must lie in (0, 1)");
    }
    if (variant.n_draws < 2) throw std::invalid_argument("gsa_search: n_draws must be >= 2");

    const int p = data.p();
    GramCache cache(data);
    SubfitWorkspace ws(data.p());

    Eigen::VectorXd t_stats(p);
    cache.solve(ModelSpec::full(p), ws, nullptr, t_stats.data());
    const std::vector<int> t_order = rank_regressors(t_stats.cwiseAbs());

    auto q = [&](std::uint64_t m) {
        return criterion_value(cache, ModelSpec::from_mask(p, m), variant.q_kind, ws);
    };
    const SensitivityProfile profile =
        estimate_st_over(p, q, variant.n_draws, gsa_seed, variant.q_kind);
    const std::vector<int> st_order = rank_regressors(profile.s_t);

    SelectionOutcome out;
    out.alpha_used = variant.tier == GsaTier::simple
                         ? variant.alpha
                         : detail::adaptive_alpha_on(cache, profile, variant.phi, ws);

    out.by_t = detail::bottom_up_on(cache, t_order, out.alpha_used, ws);
    out.by_st = detail::bottom_up_on(cache, st_order, out.alpha_used, ws);
    if (variant.tier == GsaTier::full) {
        out.by_t = detail::skip_refine_on(cache, out.by_t, out.alpha_used, ws);
        out.by_st = detail::skip_refine_on(cache, out.by_st, out.alpha_used, ws);
    }
    auto [chosen, by_bic] = detail::choose_between(cache, out.by_t, out.by_st, ws);
    out.chosen = chosen;
    out.tie_broken_by_bic = by_bic;
    return out;
}

}  // namespace gsareg

#endif
