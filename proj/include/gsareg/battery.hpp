#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gsareg/dataset.hpp"
#include "gsareg/distributions.hpp"
#include "gsareg/regression.hpp"

namespace gsareg {

// Misspecification battery: six tests whose minimum p-value gates a search
// move. A flagged entry means the test could not be computed (degenerate
// input) and was set to 1 so it cannot reject.
struct BatteryReport {
    PValue normality{1.0};
    PValue autocorrelation{1.0};
    PValue arch{1.0};
    PValue chow_split{1.0};
    PValue chow_oos{1.0};
    PValue f_vs_gum{1.0};
    double min_p = 1.0;
    bool rejected = false;

    struct Flags {
        bool normality = false;
        bool autocorrelation = false;
        bool arch = false;
        bool chow_split = false;
        bool chow_oos = false;
        bool f_vs_gum = false;
    } degenerate;

    void finalize(double alpha) {
        min_p = std::min({normality.value, autocorrelation.value, arch.value,
                          chow_split.value, chow_oos.value, f_vs_gum.value});
        rejected = min_p <= alpha;
    }
};

namespace detail {

// Solves a small least-squares system given its cross products; returns RSS.
inline double aux_rss(Eigen::MatrixXd& gram, Eigen::VectorXd& xty, double yty) {
    const int k = static_cast<int>(gram.rows());
    if (k == 0) return yty;
    const double diag_max = std::max(gram.diagonal().maxCoeff(), 0.0);
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(gram);
    bool ok = llt.info() == Eigen::Success && diag_max > 0.0;
    double rss = yty;
    if (ok) {
        const double lmin = llt.matrixLLT().diagonal().minCoeff();
        ok = lmin * lmin > kRelSingularTol * diag_max;
        if (ok) {
            Eigen::VectorXd beta = xty;
            llt.solveInPlace(beta);
            rss = yty - beta.dot(xty);
            ok = std::isfinite(rss);
        }
    }
    if (!ok) return yty;  // uninformative auxiliary fit contributes nothing
    return std::max(rss, 0.0);
}

}  // namespace detail

// Caches every window cross product a battery evaluation needs, so repeated
// calls over the same data (one per candidate move in a search) stay cheap.
// Not thread-safe; use one context per thread.
class BatteryContext {
public:
    BatteryContext(const Dataset& data, double estimation_fraction)
        : data_(&data),
          fraction_(estimation_fraction),
          m_(window_length(data.n(), estimation_fraction)),
          n90_(window_length(data.n(), 0.9)),
          mid_(m_ / 2),
          window_(data, 0, m_),
          half1_(data, 0, mid_),
          half2_(data, mid_, m_ - mid_),
          first90_(data, 0, n90_),
          full_(data, 0, data.n()),
          ws_(data.p()),
          beta_buf_(data.p()) {}

    static int window_length(int n, double fraction) {
        if (fraction != 0.9 && fraction != 1.0)
            throw std::invalid_argument("battery: estimation_fraction must be 0.9 or 1.0");
        return static_cast<int>(std::floor(fraction * n));
    }

    const GramCache& window() const { return window_; }
    int window_len() const { return m_; }

    BatteryReport run(const ModelSpec& spec, double alpha) {
        if (alpha <= 0.0 || alpha >= 1.0)
            throw std::invalid_argument("battery: alpha must lie in (0,1)");
        const Dataset& data = *data_;
        if (spec.p() != data.p()) throw std::invalid_argument("battery: spec size mismatch");
        BatteryReport rep;
        const SubfitSolution sol = window_.solve(spec, ws_, beta_buf_.data());
        const int k = sol.k;
        resid_ = (data.y().segment(0, m_).array() - window_.y_mean()).matrix();
        {
            int c = 0;
            for (int j = 0; j < spec.p(); ++j) {
                if (!spec.test(j)) continue;
                resid_ -= beta_buf_[c] * (data.X().col(j).segment(0, m_).array() -
                                          window_.col_means()[j])
                                             .matrix();
                ++c;
            }
        }
        const Eigen::VectorXd& e = resid_;
        const double scale = std::max(window_.yty(), 1.0);
        const bool perfect = sol.rss <= 1e-12 * scale;

        normality_test(rep, e, perfect);
        autocorrelation_test(rep, spec, e, k, perfect);
        arch_test(rep, e, perfect);
        chow_split_test(rep, spec, k, scale);
        chow_oos_test(rep, spec, k);
        const GumFTest gum = f_test_vs_gum(window_, spec, ws_);
        rep.f_vs_gum = gum.p;
        rep.degenerate.f_vs_gum = gum.degenerate;

        rep.finalize(alpha);
        return rep;
    }

private:
    void normality_test(BatteryReport& rep, const Eigen::VectorXd& e, bool perfect) {
        const int m = static_cast<int>(e.size());
        const double s2 = e.squaredNorm() / m;
        if (perfect || s2 <= 0.0) {
            rep.degenerate.normality = true;
            return;
        }
        const double m3 = e.array().cube().sum() / m;
        const double m4 = e.array().square().square().sum() / m;
        const double skew = m3 / std::pow(s2, 1.5);
        const double exkurt = m4 / (s2 * s2) - 3.0;
        const double jb = m / 6.0 * (skew * skew + exkurt * exkurt / 4.0);
        rep.normality = chi2_sf(jb, 2);
    }

    // Lagrange-multiplier autocorrelation test: residuals on the included
    // columns plus 4 of their own lags (zero-padded before the window).
    void autocorrelation_test(BatteryReport& rep, const ModelSpec& spec,
                              const Eigen::VectorXd& e, int k, bool perfect) {
        const int m = static_cast<int>(e.size());
        const int lags = 4;
        const double ee = e.squaredNorm();
        if (perfect || ee <= 0.0 || m <= k + lags + 1) {
            rep.degenerate.autocorrelation = true;
            return;
        }
        Eigen::MatrixXd lagged(m, lags);
        for (int l = 0; l < lags; ++l) {
            for (int t = 0; t < m; ++t) lagged(t, l) = t > l ? e[t - l - 1] : 0.0;
            lagged.col(l).array() -= lagged.col(l).mean();
        }
        const int ka = k + lags;
        Eigen::MatrixXd gram(ka, ka);
        Eigen::VectorXd xty(ka);
        const std::vector<int> idx = spec.indices();
        for (int a = 0; a < k; ++a) {
            for (int b = 0; b <= a; ++b) {
                gram(a, b) = gram(b, a) = window_.xtx()(idx[a], idx[b]);
            }
            const auto xa = data_->X().col(idx[a]).segment(0, m);
            for (int l = 0; l < lags; ++l) gram(a, k + l) = gram(k + l, a) = xa.dot(lagged.col(l));
            xty[a] = xa.dot(e);
        }
        for (int l1 = 0; l1 < lags; ++l1) {
            for (int l2 = 0; l2 <= l1; ++l2)
                gram(k + l1, k + l2) = gram(k + l2, k + l1) = lagged.col(l1).dot(lagged.col(l2));
            xty[k + l1] = lagged.col(l1).dot(e);
        }
        const double rss = detail::aux_rss(gram, xty, ee);
        const double r2 = std::clamp(1.0 - rss / ee, 0.0, 1.0);
        rep.autocorrelation = chi2_sf(m * r2, lags);
    }

    void arch_test(BatteryReport& rep, const Eigen::VectorXd& e, bool perfect) {
        const int m = static_cast<int>(e.size());
        const int lags = 4;
        const int ma = m - lags;
        if (perfect || ma <= lags + 1) {
            rep.degenerate.arch = true;
            return;
        }
        Eigen::VectorXd z(ma);
        Eigen::MatrixXd lagged(ma, lags);
        for (int t = 0; t < ma; ++t) {
            const double et = e[t + lags];
            z[t] = et * et;
            for (int l = 0; l < lags; ++l) {
                const double el = e[t + lags - l - 1];
                lagged(t, l) = el * el;
            }
        }
        z.array() -= z.mean();
        lagged.rowwise() -= lagged.colwise().mean().eval();
        const double zz = z.squaredNorm();
        if (zz <= 0.0) {
            rep.degenerate.arch = true;
            return;
        }
        Eigen::MatrixXd gram = lagged.transpose() * lagged;
        Eigen::VectorXd xty = lagged.transpose() * z;
        const double rss = detail::aux_rss(gram, xty, zz);
        const double r2 = std::clamp(1.0 - rss / zz, 0.0, 1.0);
        rep.arch = chi2_sf(ma * r2, lags);
    }

    // Parameter-stability F test across the window midpoint; each segment is
    // de-meaned on its own, so the implicit intercept may break too.
    void chow_split_test(BatteryReport& rep, const ModelSpec& spec, int k, double scale) {
        const int kc = k + 1;
        const int dof2 = m_ - 2 * kc;
        if (mid_ <= kc || (m_ - mid_) <= kc || dof2 <= 0) {
            rep.degenerate.chow_split = true;
            return;
        }
        const SubfitSolution pooled = window_.solve(spec, ws_);
        const SubfitSolution s1 = half1_.solve(spec, ws_);
        const SubfitSolution s2 = half2_.solve(spec, ws_);
        const double rss12 = s1.rss + s2.rss;
        if (rss12 <= 1e-12 * scale || s1.degenerate || s2.degenerate) {
            rep.degenerate.chow_split = true;
            return;
        }
        const double fstat = ((pooled.rss - rss12) / kc) / (rss12 / dof2);
        rep.chow_split = f_sf(std::max(fstat, 0.0), kc, dof2);
    }

    // Predictive stability: the first 90% of all observations against the
    // final 10%, regardless of the estimation window.
    void chow_oos_test(BatteryReport& rep, const ModelSpec& spec, int k) {
        const int n = data_->n();
        const int n1 = n90_;
        const int n2 = n - n1;
        const int dof2 = n1 - k - 1;
        if (n2 < 1 || dof2 <= 0) {
            rep.degenerate.chow_oos = true;
            return;
        }
        const SubfitSolution base = first90_.solve(spec, ws_);
        const SubfitSolution all = full_.solve(spec, ws_);
        const double scale = std::max(first90_.yty(), 1.0);
        if (base.rss <= 1e-12 * scale || base.degenerate) {
            rep.degenerate.chow_oos = true;
            return;
        }
        const double fstat = ((all.rss - base.rss) / n2) / (base.rss / dof2);
        rep.chow_oos = f_sf(std::max(fstat, 0.0), n2, dof2);
    }

    const Dataset* data_;
    double fraction_;
    int m_;
    int n90_;
    int mid_;
    GramCache window_;
    GramCache half1_;
    GramCache half2_;
    GramCache first90_;
    GramCache full_;
    SubfitWorkspace ws_;
    std::vector<double> beta_buf_;
    Eigen::VectorXd resid_;
};

inline BatteryReport run_battery(const Dataset& data, const ModelSpec& spec, double alpha,
                                 double estimation_fraction) {
    BatteryContext ctx(data, estimation_fraction);
    return ctx.run(spec, alpha);
}

}  // namespace gsareg
