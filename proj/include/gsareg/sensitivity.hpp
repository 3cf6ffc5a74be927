#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "gsareg/dataset.hpp"
#include "gsareg/model_spec.hpp"
#include "gsareg/regression.hpp"
#include "gsareg/rng.hpp"

namespace gsareg {

inline constexpr int kDefaultSensitivityDraws = 128;
inline constexpr int kMaxEnumerationP = 20;

// Total-effect decomposition of a scalar criterion over the 2^p submodels.
struct SensitivityProfile {
    Eigen::VectorXd s_t;          // total-effect shares, sigma2_t / v_hat
    Eigen::VectorXd sigma2_t;     // total-effect numerators
    Eigen::VectorXd se_sigma2_t;  // MC standard errors (zero for enumeration)
    double v_hat = 0.0;
    int n_draws = 0;
    QKind q_kind = QKind::bic;
    bool degenerate = false;  // criterion constant over the sampled models
    long n_evals = 0;
    long n_unique_fits = 0;
};

namespace detail {

inline std::uint64_t mask_bits(std::uint64_t word, int p) {
    return p >= 64 ? word : word & ((std::uint64_t{1} << p) - 1u);
}

template <class QFn>
class MemoizedQ {
public:
    explicit MemoizedQ(QFn& q) : q_(q) { memo_.reserve(1024); }

    double operator()(std::uint64_t mask) {
        ++evals_;
        auto it = memo_.find(mask);
        if (it != memo_.end()) return it->second;
        const double v = q_(mask);
        memo_.emplace(mask, v);
        return v;
    }

    long evals() const { return evals_; }
    long unique() const { return static_cast<long>(memo_.size()); }

private:
    QFn& q_;
    std::unordered_map<std::uint64_t, double> memo_;
    long evals_ = 0;
};

}  // namespace detail

// Paired-flip MC estimator: each of n_draws uniform masks is evaluated
// together with its p single-bit flips, so the criterion is queried exactly
// n_draws * (p + 1) times (repeats served from a memo table). The draw of
// replication l depends only on (seed, l), never on execution order.
template <class QFn>
SensitivityProfile estimate_st_over(int p, QFn&& q, int n_draws, std::uint64_t seed,
                                    QKind kind_label = QKind::bic) {
    if (p < 1 || p > 64)
        throw std::invalid_argument("estimate_st: p must lie in [1, 64]");
    if (n_draws < 2) throw std::invalid_argument("estimate_st: need at least 2 draws");
    detail::MemoizedQ<QFn> qm(q);

    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd s2 = Eigen::VectorXd::Zero(p);
    double qsum = 0.0, qsumsq = 0.0;
    for (int l = 0; l < n_draws; ++l) {
        const std::uint64_t mask = detail::mask_bits(derive_seed(seed, l), p);
        const double ql = qm(mask);
        qsum += ql;
        qsumsq += ql * ql;
        for (int i = 0; i < p; ++i) {
            const double qi = qm(mask ^ (std::uint64_t{1} << i));
            const double d = qi - ql;
            const double contrib = 0.25 * d * d;
            s1[i] += contrib;
            s2[i] += contrib * contrib;
        }
    }

    SensitivityProfile out;
    out.n_draws = n_draws;
    out.q_kind = kind_label;
    out.n_evals = qm.evals();
    out.n_unique_fits = qm.unique();
    out.sigma2_t = s1 / n_draws;
    out.se_sigma2_t.resize(p);
    for (int i = 0; i < p; ++i) {
        const double mean = out.sigma2_t[i];
        const double var = std::max(s2[i] / n_draws - mean * mean, 0.0);
        out.se_sigma2_t[i] = std::sqrt(var / (n_draws - 1));
    }
    const double qbar = qsum / n_draws;
    out.v_hat = std::max((qsumsq - n_draws * qbar * qbar) / (n_draws - 1), 0.0);
    if (out.v_hat > 0.0) {
        out.s_t = out.sigma2_t / out.v_hat;
    } else {
        out.s_t = Eigen::VectorXd::Zero(p);
        out.degenerate = true;
    }
    return out;
}

// Exact decomposition by full enumeration of the 2^p submodels. The variance
// and every total-effect numerator are population quantities here, making
// this the oracle the MC estimator is tested against.
template <class QFn>
SensitivityProfile exact_st_over(int p, QFn&& q, QKind kind_label = QKind::bic) {
    if (p < 1) throw std::invalid_argument("exact_st: p must be positive");
    if (p > kMaxEnumerationP)
        throw std::invalid_argument("exact_st: enumeration supports at most " +
                                    std::to_string(kMaxEnumerationP) +
                                    " regressors, got " + std::to_string(p));
    const std::uint64_t total = std::uint64_t{1} << p;
    std::vector<double> qv(total);
    double qsum = 0.0, qsumsq = 0.0;
    for (std::uint64_t m = 0; m < total; ++m) {
        qv[m] = q(m);
        qsum += qv[m];
        qsumsq += qv[m] * qv[m];
    }
    const double qbar = qsum / static_cast<double>(total);
    const double v = std::max(qsumsq / static_cast<double>(total) - qbar * qbar, 0.0);

    SensitivityProfile out;
    out.n_draws = static_cast<int>(std::min<std::uint64_t>(
        total, std::uint64_t{std::numeric_limits<int>::max()}));
    out.q_kind = kind_label;
    out.n_evals = static_cast<long>(total);
    out.n_unique_fits = static_cast<long>(total);
    out.v_hat = v;
    out.sigma2_t.resize(p);
    out.se_sigma2_t = Eigen::VectorXd::Zero(p);
    for (int i = 0; i < p; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << i;
        double acc = 0.0;
        for (std::uint64_t m = 0; m < total; ++m) {
            if (m & bit) continue;
            const double d = qv[m | bit] - qv[m];
            acc += d * d;
        }
        out.sigma2_t[i] = acc / (4.0 * static_cast<double>(total / 2));
    }
    if (v > 0.0) {
        out.s_t = out.sigma2_t / v;
    } else {
        out.s_t = Eigen::VectorXd::Zero(p);
        out.degenerate = true;
    }
    return out;
}

// First-order (main-effect) shares by enumeration; used only to confirm that
// total and first-order effects coincide when the criterion is additive.
template <class QFn>
Eigen::VectorXd exact_first_order_over(int p, QFn&& q) {
    if (p < 1 || p > kMaxEnumerationP)
        throw std::invalid_argument("exact_first_order: p out of range");
    const std::uint64_t total = std::uint64_t{1} << p;
    std::vector<double> qv(total);
    double qsum = 0.0, qsumsq = 0.0;
    for (std::uint64_t m = 0; m < total; ++m) {
        qv[m] = q(m);
        qsum += qv[m];
        qsumsq += qv[m] * qv[m];
    }
    const double qbar = qsum / static_cast<double>(total);
    const double v = std::max(qsumsq / static_cast<double>(total) - qbar * qbar, 0.0);
    Eigen::VectorXd s(p);
    for (int i = 0; i < p; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << i;
        double m1 = 0.0, m0 = 0.0;
        for (std::uint64_t m = 0; m < total; ++m) (m & bit ? m1 : m0) += qv[m];
        m1 /= static_cast<double>(total / 2);
        m0 /= static_cast<double>(total / 2);
        const double half = 0.5 * (m1 - m0);
        s[i] = v > 0.0 ? half * half / v : 0.0;
    }
    return s;
}

inline SensitivityProfile estimate_st(const Dataset& data, int n_draws, std::uint64_t seed,
                                      QKind kind = QKind::bic) {
    GramCache cache(data);
    SubfitWorkspace ws(data.p());
    auto q = [&](std::uint64_t m) {
        return criterion_value(cache, ModelSpec::from_mask(data.p(), m), kind, ws);
    };
    return estimate_st_over(data.p(), q, n_draws, seed, kind);
}

inline SensitivityProfile exact_st(const Dataset& data, QKind kind = QKind::bic) {
    GramCache cache(data);
    SubfitWorkspace ws(data.p());
    auto q = [&](std::uint64_t m) {
        return criterion_value(cache, ModelSpec::from_mask(data.p(), m), kind, ws);
    };
    return exact_st_over(data.p(), q, kind);
}

inline Eigen::VectorXd exact_first_order(const Dataset& data, QKind kind = QKind::bic) {
    GramCache cache(data);
    SubfitWorkspace ws(data.p());
    auto q = [&](std::uint64_t m) {
        return criterion_value(cache, ModelSpec::from_mask(data.p(), m), kind, ws);
    };
    return exact_first_order_over(data.p(), q);
}

enum class RankMethod { t_rank, st_rank };

// Permutation of 0..p-1 by descending score; ties go to the lower index.
inline std::vector<int> rank_regressors(const Eigen::VectorXd& scores) {
    std::vector<int> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return order;
}

struct CoveringScore {
    int b = 0;
    double delta = 0.0;
    RankMethod method = RankMethod::t_rank;
};

// Smallest ranking prefix that covers the whole support, relative to the
// support size.
inline CoveringScore covering_delta(const std::vector<int>& ordering,
                                    const ModelSpec& true_spec, RankMethod method) {
    if (true_spec.empty())
        throw std::invalid_argument("covering_delta: undefined for an empty support");
    if (static_cast<int>(ordering.size()) != true_spec.p())
        throw std::invalid_argument("covering_delta: ordering length != p");
    const int r0 = true_spec.count();
    int found = 0;
    CoveringScore out;
    out.method = method;
    for (std::size_t pos = 0; pos < ordering.size(); ++pos) {
        if (true_spec.test(ordering[pos])) ++found;
        if (found == r0) {
            out.b = static_cast<int>(pos) + 1;
            out.delta = static_cast<double>(out.b) / r0;
            return out;
        }
    }
    throw std::invalid_argument("covering_delta: ordering is not a permutation of 0..p-1");
}

}  // namespace gsareg
