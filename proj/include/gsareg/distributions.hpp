#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gsareg {

/**
 * @brief Probability value in [0, 1]; construction rejects NaN and values
 *        outside the unit interval beyond rounding slack.
 */
struct PValue {
    double value = 1.0;

    PValue() = default;
    explicit PValue(double v) : value(v) {
        if (std::isnan(v)) throw std::invalid_argument("PValue: NaN");
        if (v < -1e-12 || v > 1.0 + 1e-12) throw std::invalid_argument("PValue: outside [0,1]");
        if (value < 0.0) value = 0.0;
        if (value > 1.0) value = 1.0;
    }
};

namespace detail {

inline constexpr int kMaxIter = 500;
inline constexpr double kEps = 1e-15;
inline constexpr double kFpMin = 1e-300;

inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite argument");
}

/// Lower regularized incomplete gamma P(a,x) by its power series; valid for x < a+1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kEps)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw std::runtime_error("gamma_p_series: no convergence");
}

/// Upper regularized incomplete gamma Q(a,x) by continued fraction; valid for x >= a+1.
inline double gamma_q_cf(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps)
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
    throw std::runtime_error("gamma_q_cf: no convergence");
}

/// Upper regularized incomplete gamma Q(a,x), switching representation at the mean.
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

/// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw std::runtime_error("beta_cf: no convergence");
}

/// Regularized incomplete beta I_x(a,b) with the usual symmetry switchover.
inline double inc_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("inc_beta: bad shape");
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("inc_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace detail

/// Standard normal CDF.
inline double normal_cdf(double x) {
    detail::require_finite(x, "normal_cdf");
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/// Chi-square survival function P(X > x) with df degrees of freedom.
inline PValue chi2_sf(double x, int df) {
    detail::require_finite(x, "chi2_sf");
    if (df < 1) throw std::invalid_argument("chi2_sf: df < 1");
    if (x < 0.0) throw std::invalid_argument("chi2_sf: x < 0");
    return PValue(detail::gamma_q(0.5 * df, 0.5 * x));
}

/// F survival function P(X > x) with (d1, d2) degrees of freedom.
inline PValue f_sf(double x, int d1, int d2) {
    detail::require_finite(x, "f_sf");
    if (d1 < 1 || d2 < 1) throw std::invalid_argument("f_sf: df < 1");
    if (x < 0.0) throw std::invalid_argument("f_sf: x < 0");
    if (x == 0.0) return PValue(1.0);
    const double w = static_cast<double>(d2) / (d2 + static_cast<double>(d1) * x);
    return PValue(detail::inc_beta(0.5 * d2, 0.5 * d1, w));
}

/// Two-sided p-value of a t statistic with df degrees of freedom, through
/// the identity t(df)^2 = F(1, df).
inline PValue t_two_sided_p(double t, int df) {
    detail::require_finite(t, "t_two_sided_p");
    return f_sf(t * t, 1, df);
}

}  // namespace gsareg
