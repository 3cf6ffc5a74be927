#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gsareg/dataset.hpp"
#include "gsareg/distributions.hpp"
#include "gsareg/model_spec.hpp"

namespace gsareg {

// Which scalar summary of a submodel fit a search consumes.
enum class QKind { bic, aic, hp };

namespace detail {
// RSS can hit exact zero on noiseless inputs; floor it before taking logs.
inline constexpr double kRssFloor = 1e-300;
inline constexpr double kRelSingularTol = 1e-13;
}  // namespace detail

// Reusable scratch buffers for submodel solves. Not thread-safe: use one
// instance per thread.
class SubfitWorkspace {
public:
    explicit SubfitWorkspace(int pmax)
        : a_(pmax * pmax), inv_(pmax * pmax), b_(pmax), beta_(pmax) {
        idx_.reserve(pmax);
    }

    std::vector<double> a_;
    std::vector<double> inv_;
    std::vector<double> b_;
    std::vector<double> beta_;
    std::vector<int> idx_;
};

struct SubfitSolution {
    double rss = 0.0;
    int k = 0;
    bool degenerate = false;
};

// Cross products of a row window [start, start+len), de-meaned within the
// window, from which any submodel's least-squares fit can be recovered
// without touching the rows again.
class GramCache {
public:
    GramCache(const Dataset& data, int start, int len)
        : n_(len), p_(data.p()), start_(start) {
        if (start < 0 || len < 1 || start + len > data.n())
            throw std::invalid_argument("GramCache: window out of range");
        Eigen::MatrixXd xw = data.X().middleRows(start, len);
        Eigen::VectorXd yw = data.y().segment(start, len);
        col_means_ = xw.colwise().mean();
        y_mean_ = yw.mean();
        xw.rowwise() -= col_means_.transpose();
        yw.array() -= y_mean_;
        xtx_ = xw.transpose() * xw;
        xty_ = xw.transpose() * yw;
        yty_ = yw.squaredNorm();
    }

    explicit GramCache(const Dataset& data) : GramCache(data, 0, data.n()) {}

    int n() const { return n_; }
    int p() const { return p_; }
    int start() const { return start_; }
    double yty() const { return yty_; }
    const Eigen::MatrixXd& xtx() const { return xtx_; }
    const Eigen::VectorXd& xty() const { return xty_; }
    const Eigen::VectorXd& col_means() const { return col_means_; }
    double y_mean() const { return y_mean_; }

    // Least-squares residual sum of squares of the submodel selected by spec.
    // The Gram submatrix is factored in place inside the workspace; singular
    // systems fall back to the Moore-Penrose solution and raise `degenerate`.
    // When beta_out / t_out are non-null they receive the k coefficients and
    // t ratios (unbiased-variance convention) in ascending column order.
    SubfitSolution solve(const ModelSpec& spec, SubfitWorkspace& ws,
                         double* beta_out = nullptr, double* t_out = nullptr) const {
        if (spec.p() != p_) throw std::invalid_argument("GramCache: spec size mismatch");
        SubfitSolution out;
        ws.idx_.clear();
        for (int j = 0; j < p_; ++j)
            if (spec.test(j)) ws.idx_.push_back(j);
        out.k = static_cast<int>(ws.idx_.size());
        if (out.k == 0) {
            out.rss = yty_;
            return out;
        }
        const int k = out.k;
        Eigen::Map<Eigen::MatrixXd> a(ws.a_.data(), k, k);
        Eigen::Map<Eigen::VectorXd> b(ws.b_.data(), k);
        for (int cj = 0; cj < k; ++cj) {
            const int j = ws.idx_[cj];
            b[cj] = xty_[j];
            for (int ci = 0; ci < k; ++ci) a(ci, cj) = xtx_(ws.idx_[ci], j);
        }
        const double diag_max = a.diagonal().maxCoeff();
        Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(a);
        bool ok = llt.info() == Eigen::Success && diag_max > 0.0;
        if (ok) {
            const double lmin = llt.matrixLLT().diagonal().minCoeff();
            ok = lmin * lmin > detail::kRelSingularTol * diag_max;
        }
        double rss;
        Eigen::Map<Eigen::VectorXd> beta(ws.beta_.data(), k);
        Eigen::Map<Eigen::VectorXd> invdiag(ws.b_.data(), k);  // reused after beta solve
        if (ok) {
            beta = b;
            llt.solveInPlace(beta);
            rss = yty_ - beta.dot(b);
            ok = std::isfinite(rss) && rss > -1e-8 * std::max(yty_, 1.0);
            if (ok && t_out != nullptr) {
                Eigen::Map<Eigen::MatrixXd> inv(ws.inv_.data(), k, k);
                inv.setIdentity();
                llt.solveInPlace(inv);
                invdiag = inv.diagonal();
            }
        } else {
            rss = 0.0;
        }
        if (!ok) {
            // Refill the Gram block (the failed factorization ran in place).
            Eigen::MatrixXd asub(k, k);
            Eigen::VectorXd bsub(k);
            for (int cj = 0; cj < k; ++cj) {
                const int j = ws.idx_[cj];
                bsub[cj] = xty_[j];
                for (int ci = 0; ci < k; ++ci) asub(ci, cj) = xtx_(ws.idx_[ci], j);
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(asub);
            const Eigen::VectorXd& ev = es.eigenvalues();
            const double cutoff = std::max(ev.maxCoeff(), 0.0) * 1e-12;
            Eigen::VectorXd w = es.eigenvectors().transpose() * bsub;
            for (int i = 0; i < k; ++i) w[i] = ev[i] > cutoff ? w[i] / ev[i] : 0.0;
            beta = es.eigenvectors() * w;
            rss = yty_ - beta.dot(bsub);
            if (t_out != nullptr) {
                for (int i = 0; i < k; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < k; ++j)
                        if (ev[j] > cutoff)
                            s += es.eigenvectors()(i, j) * es.eigenvectors()(i, j) / ev[j];
                    invdiag[i] = s;
                }
            }
            out.degenerate = true;
        }
        out.rss = std::max(rss, 0.0);
        if (t_out != nullptr) {
            const double s2 = n_ > k ? out.rss / (n_ - k) : 0.0;
            for (int i = 0; i < k; ++i) {
                const double var = s2 * invdiag[i];
                double t = var > 0.0 && std::isfinite(var) ? beta[i] / std::sqrt(var) : 0.0;
                // A vanishing variance means an exact fit: infinitely strong.
                if (var <= 0.0 && beta[i] != 0.0) t = beta[i] > 0.0 ? 1e15 : -1e15;
                t_out[i] = std::clamp(t, -1e15, 1e15);
            }
        }
        if (beta_out != nullptr)
            std::copy(ws.beta_.begin(), ws.beta_.begin() + k, beta_out);
        return out;
    }

    double rss(const ModelSpec& spec, SubfitWorkspace& ws) const { return solve(spec, ws).rss; }

    double rss(const ModelSpec& spec) const {
        SubfitWorkspace ws(p_);
        return solve(spec, ws).rss;
    }

private:
    int n_;
    int p_;
    int start_;
    Eigen::MatrixXd xtx_;
    Eigen::VectorXd xty_;
    Eigen::VectorXd col_means_;
    double y_mean_ = 0.0;
    double yty_ = 0.0;
};

inline double information_criterion(double rss, int n, int k, QKind kind) {
    const double s2 = std::max(rss, detail::kRssFloor) / n;
    const double base = std::log(s2);
    switch (kind) {
        case QKind::bic: return base + k * std::log(static_cast<double>(n)) / n;
        case QKind::aic: return base + 2.0 * k / n;
        case QKind::hp: return base + static_cast<double>(k) / n;
    }
    throw std::logic_error("information_criterion: bad kind");
}

// Hot-path scalar evaluation used by the sensitivity estimators.
inline double criterion_value(const GramCache& cache, const ModelSpec& spec, QKind kind,
                              SubfitWorkspace& ws) {
    const SubfitSolution s = cache.solve(spec, ws);
    return information_criterion(s.rss, cache.n(), s.k, kind);
}

struct FitResult {
    Eigen::VectorXd beta_hat;    // length p, zero at excluded positions
    Eigen::VectorXd residuals;   // length of the fitted window
    Eigen::VectorXd t_stats;     // length k, ascending included-column order
    std::vector<int> included;   // ascending column indices, aligned with t_stats
    double rss = 0.0;
    double sigma2_ml = 0.0;
    double sigma2_unb = 0.0;
    int k_gamma = 0;
    int n_used = 0;
    double bic = 0.0;
    double aic = 0.0;
    double hp_ic = 0.0;
    bool degenerate = false;
};

// Least-squares fit of a submodel on a row window, de-meaned within the
// window. Produces residuals and t ratios (computed with sigma2_unb); the
// rank-deficient case is solved by the Moore-Penrose pseudo-inverse and
// flagged.
inline FitResult fit_window(const Dataset& data, const ModelSpec& spec, int start, int len) {
    if (spec.p() != data.p()) throw std::invalid_argument("fit_window: spec size mismatch");
    if (start < 0 || len < 1 || start + len > data.n())
        throw std::invalid_argument("fit_window: window out of range");
    const std::vector<int> idx = spec.indices();
    const int k = static_cast<int>(idx.size());
    if (k >= len) throw std::invalid_argument("fit_window: more regressors than observations");

    Eigen::VectorXd yw = data.y().segment(start, len);
    yw.array() -= yw.mean();

    FitResult out;
    out.k_gamma = k;
    out.n_used = len;
    out.beta_hat = Eigen::VectorXd::Zero(data.p());
    out.included = idx;

    Eigen::MatrixXd xw(len, k);
    for (int c = 0; c < k; ++c) xw.col(c) = data.X().col(idx[c]).segment(start, len);
    if (k > 0) xw.rowwise() -= xw.colwise().mean().eval();

    Eigen::VectorXd beta(k), invdiag(k);
    if (k > 0) {
        Eigen::MatrixXd gram = xw.transpose() * xw;
        Eigen::VectorXd xty = xw.transpose() * yw;
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        bool ok = llt.info() == Eigen::Success;
        if (ok) {
            const double lmin = llt.matrixLLT().diagonal().minCoeff();
            ok = lmin * lmin > detail::kRelSingularTol * std::max(gram.diagonal().maxCoeff(), 0.0);
        }
        if (ok) {
            beta = llt.solve(xty);
            invdiag = llt.solve(Eigen::MatrixXd::Identity(k, k)).diagonal();
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
            const Eigen::VectorXd& ev = es.eigenvalues();
            const double cutoff = std::max(ev.maxCoeff(), 0.0) * 1e-12;
            Eigen::VectorXd w = es.eigenvectors().transpose() * xty;
            Eigen::VectorXd d(k);
            for (int i = 0; i < k; ++i) {
                const bool keep = ev[i] > cutoff;
                w[i] = keep ? w[i] / ev[i] : 0.0;
                d[i] = keep ? 1.0 / ev[i] : 0.0;
            }
            beta = es.eigenvectors() * w;
            for (int i = 0; i < k; ++i) {
                double s = 0.0;
                for (int j = 0; j < k; ++j)
                    s += es.eigenvectors()(i, j) * es.eigenvectors()(i, j) * d[j];
                invdiag[i] = s;
            }
            out.degenerate = true;
        }
        out.residuals = yw - xw * beta;
        for (int c = 0; c < k; ++c) out.beta_hat[idx[c]] = beta[c];
    } else {
        out.residuals = yw;
    }

    out.rss = out.residuals.squaredNorm();
    out.sigma2_ml = out.rss / len;
    out.sigma2_unb = len > k ? out.rss / (len - k) : std::numeric_limits<double>::infinity();
    out.bic = information_criterion(out.rss, len, k, QKind::bic);
    out.aic = information_criterion(out.rss, len, k, QKind::aic);
    out.hp_ic = information_criterion(out.rss, len, k, QKind::hp);

    out.t_stats.resize(k);
    for (int c = 0; c < k; ++c) {
        const double var = out.sigma2_unb * invdiag[c];
        out.t_stats[c] = var > 0.0 && std::isfinite(var) ? beta[c] / std::sqrt(var) : 0.0;
    }
    return out;
}

inline FitResult fit(const Dataset& data, const ModelSpec& spec) {
    return fit_window(data, spec, 0, data.n());
}

struct GumFTest {
    PValue p{1.0};
    bool degenerate = false;  // GUM fits perfectly; test cannot discriminate
};

// F test of a restricted spec against the full model (the GUM), computed on
// whatever window the cache was built over:
//   F = ((RSS_spec - RSS_gum) / (p - k)) / (RSS_gum / (n - p)).
inline GumFTest f_test_vs_gum(const GramCache& cache, const ModelSpec& spec,
                              SubfitWorkspace& ws) {
    const int p = cache.p();
    const int n = cache.n();
    if (n <= p) throw std::invalid_argument("f_test_vs_gum: window shorter than GUM");
    const double rss_spec = cache.rss(spec, ws);
    const double rss_gum = cache.rss(ModelSpec::full(p), ws);
    const int k = spec.count();
    if (k == p) return {PValue(1.0), false};
    const double scale = std::max(cache.yty(), 1.0);
    if (rss_gum <= 1e-12 * scale) {
        GumFTest out;
        out.degenerate = true;
        out.p = rss_spec <= 1e-12 * scale ? PValue(1.0) : PValue(0.0);
        return out;
    }
    const double fstat = ((rss_spec - rss_gum) / (p - k)) / (rss_gum / (n - p));
    return {f_sf(std::max(fstat, 0.0), p - k, n - p), false};
}

inline GumFTest f_test_vs_gum(const Dataset& data, const ModelSpec& spec) {
    GramCache cache(data);
    SubfitWorkspace ws(data.p());
    return f_test_vs_gum(cache, spec, ws);
}

}  // namespace gsareg
