#pragma once

// Central and noncentral Student-t distributions and the special functions
// they rest on. Everything here is a pure function of its arguments.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "algocmp/errors.hpp"

namespace algocmp {

/// Degrees of freedom of a t distribution; any positive real.
class DegreesOfFreedom {
public:
    explicit DegreesOfFreedom(double df) : df_(df) {
        if (!(df > 0.0) || !std::isfinite(df)) {
            throw DomainError("degrees of freedom must be positive and finite, got " +
                              std::to_string(df));
        }
    }
    double value() const noexcept { return df_; }

private:
    double df_;
};

/// Noncentrality parameter of a noncentral t distribution.
class NoncentralityParameter {
public:
    explicit NoncentralityParameter(double ncp) : ncp_(ncp) {
        if (!std::isfinite(ncp)) throw DomainError("noncentrality parameter must be finite");
    }
    double value() const noexcept { return ncp_; }

private:
    double ncp_;
};

namespace detail {

/// log Gamma(x) for x > 0 without touching the global signgam.
inline double log_gamma(double x) noexcept {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

inline double log_beta(double a, double b) noexcept {
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

// Continued fraction for the incomplete beta function (modified Lentz).
inline double ibeta_continued_fraction(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    const int max_iter = 20000 + static_cast<int>(20.0 * std::sqrt(std::max(a, b)));
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw DomainError("incomplete beta continued fraction failed to converge");
}

// Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> kKronrodNodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct QuadratureSegment {
    double lo;
    double hi;
    double value;
    double error;
    bool operator<(const QuadratureSegment& other) const noexcept {
        return error < other.error;
    }
};

template <class F>
QuadratureSegment gauss_kronrod15(F& f, double lo, double hi) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = f(center);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kKronrodNodes[i];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kKronrodWeights[i] * pair;
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
    }
    return {lo, hi, kronrod * half, std::fabs((kronrod - gauss) * half)};
}

/// Globally adaptive Gauss-Kronrod integration of f over [lo, hi].
template <class F>
double integrate(F f, double lo, double hi, double abs_tol = 1e-13,
                 int max_segments = 2000) {
    std::priority_queue<QuadratureSegment> segments;
    QuadratureSegment first = gauss_kronrod15(f, lo, hi);
    double total = first.value;
    double error = first.error;
    segments.push(first);
    while (error > abs_tol && static_cast<int>(segments.size()) < max_segments) {
        const QuadratureSegment worst = segments.top();
        segments.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        const QuadratureSegment left = gauss_kronrod15(f, worst.lo, mid);
        const QuadratureSegment right = gauss_kronrod15(f, mid, worst.hi);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        segments.push(left);
        segments.push(right);
    }
    return total;
}

/// Root of an increasing function g on [lo, hi] with g(lo) <= 0 <= g(hi).
/// Secant steps inside the bracket, with bisection whenever the bracket
/// fails to halve.
template <class G>
double bracketed_root(G g, double lo, double hi, double g_lo, double g_hi,
                      double g_tol, double x_tol = 1e-15) {
    double best = std::fabs(g_lo) < std::fabs(g_hi) ? lo : hi;
    double best_g = std::min(std::fabs(g_lo), std::fabs(g_hi));
    bool bisect_next = false;
    double width = hi - lo;
    for (int iter = 0; iter < 400; ++iter) {
        if (best_g <= g_tol) return best;
        if (hi - lo <= x_tol * std::max(1.0, std::fabs(best))) return best;
        double x = 0.5 * (lo + hi);
        if (!bisect_next && g_hi != g_lo) {
            const double secant = lo - g_lo * (hi - lo) / (g_hi - g_lo);
            if (secant > lo && secant < hi) x = secant;
        }
        if (x <= lo || x >= hi) x = 0.5 * (lo + hi);
        if (x <= lo || x >= hi) return best;
        const double gx = g(x);
        if (std::fabs(gx) < best_g) {
            best = x;
            best_g = std::fabs(gx);
        }
        if (gx < 0.0) {
            lo = x;
            g_lo = gx;
        } else {
            hi = x;
            g_hi = gx;
        }
        const double new_width = hi - lo;
        bisect_next = new_width > 0.5 * width;
        width = new_width;
    }
    return best;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b). Pass y = 1 - x when it is known
/// more accurately than by subtraction.
inline double incomplete_beta(double a, double b, double x, double y) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete_beta: a, b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete_beta: x outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (y == 0.0) return 1.0;
    const double log_front = a * std::log(x) + b * std::log(y) - detail::log_beta(a, b);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::ibeta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * detail::ibeta_continued_fraction(b, a, y) / b;
}

inline double incomplete_beta(double a, double b, double x) {
    return incomplete_beta(a, b, x, 1.0 - x);
}

/// Standard normal CDF.
inline double normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Standard normal quantile: rational initial approximation polished with
/// Halley steps against erfc.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double kLow = 0.02425;
    double x = 0.0;
    if (p < kLow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - kLow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int i = 0; i < 2; ++i) {
        // Work in the smaller tail to keep e accurate.
        const double e = (x < 0.0) ? 0.5 * std::erfc(-x / std::numbers::sqrt2) - p
                                   : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
        x = x - u / (1.0 + 0.5 * x * u);
    }
    return x;
}

/// P(T <= x) for a central Student-t variable.
inline double t_cdf(double x, DegreesOfFreedom df) {
    if (!std::isfinite(x)) throw DomainError("t_cdf: x must be finite");
    const double nu = df.value();
    const double x2 = x * x;
    double z = 0.0;  // nu / (nu + x^2)
    double y = 1.0;  // x^2 / (nu + x^2)
    if (std::isfinite(x2)) {
        z = nu / (nu + x2);
        y = x2 / (nu + x2);
    }
    // P(|T| > |x|) / 2
    const double tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, z, y);
    return x > 0.0 ? 1.0 - tail : tail;
}

namespace detail {

// Solve t_cdf(x) = p for p <= 0.5 (x <= 0).
inline double t_lower_quantile(double p, DegreesOfFreedom df) {
    if (p == 0.5) return 0.0;
    double hi = 0.0;
    double g_hi = 0.5 - p;
    double lo = std::min(-1.0, normal_quantile(p) * 1.5);
    double g_lo = t_cdf(lo, df) - p;
    while (g_lo > 0.0) {
        hi = lo;
        g_hi = g_lo;
        lo *= 2.0;
        if (!std::isfinite(lo)) throw DomainError("t_quantile: bracket search overflowed");
        g_lo = t_cdf(lo, df) - p;
    }
    auto g = [&](double x) { return t_cdf(x, df) - p; };
    return bracketed_root(g, lo, hi, g_lo, g_hi, std::max(1e-15, p * 1e-13));
}

}  // namespace detail

/// q-th quantile of the central Student-t distribution.
inline double t_quantile(double p, DegreesOfFreedom df) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("t_quantile: p must lie in (0, 1)");
    if (p > 0.5) return -detail::t_lower_quantile(1.0 - p, df);
    return detail::t_lower_quantile(p, df);
}

namespace detail {

inline constexpr double kSeriesTruncation = 1e-12;
inline constexpr double kSeriesNcpLimit = 40.0;

// Series over incomplete-beta terms (Lenth, AS 243) for x >= 0.
// Returns NaN when the series does not converge within its iteration cap.
inline double noncentral_t_cdf_series(double x, double nu, double delta) {
    const double x2 = x * x;
    const double y = x2 / (x2 + nu);
    const double w = nu / (x2 + nu);  // 1 - y
    const double base = normal_cdf(-delta);
    if (y == 0.0) return base;

    const double lambda = 0.5 * delta * delta;
    const double half_nu = 0.5 * nu;
    const double abs_delta = std::fabs(delta);
    const double sign = delta < 0.0 ? -1.0 : 1.0;
    const double log_lambda = lambda > 0.0 ? std::log(lambda) : -INFINITY;
    const double log_y = std::log(y);
    const double log_w = std::log(w);
    const double q_total = std::fabs(2.0 * normal_cdf(abs_delta) - 1.0);

    // I_y(j + 1/2, nu/2) and I_y(j + 1, nu/2), advanced by
    // I_y(a + 1, b) = I_y(a, b) - y^a w^b / (a B(a, b)).
    double ib_half = incomplete_beta(0.5, half_nu, y, w);
    double ib_one = incomplete_beta(1.0, half_nu, y, w);

    double sum = 0.0;
    double p_acc = 0.0;
    double q_acc = 0.0;
    const auto mode = static_cast<long>(lambda);
    const long max_terms = mode + 200 + static_cast<long>(60.0 * std::sqrt(lambda + 1.0));
    for (long j = 0; j <= max_terms; ++j) {
        const double jd = static_cast<double>(j);
        const double log_pj = -lambda + (j == 0 ? 0.0 : jd * log_lambda) - log_gamma(jd + 1.0);
        const double log_qj = std::log(abs_delta) - lambda +
                              (j == 0 ? 0.0 : jd * log_lambda) - 0.5 * std::numbers::ln2 -
                              log_gamma(jd + 1.5);
        const double pj = std::exp(log_pj);
        const double qj = abs_delta > 0.0 ? std::exp(log_qj) : 0.0;
        sum += pj * ib_half + sign * qj * ib_one;
        p_acc += pj;
        q_acc += qj;

        const double p_rest = std::max(0.0, 1.0 - p_acc);
        const double q_rest = std::max(0.0, q_total - q_acc);
        if (j >= mode && 0.5 * (p_rest * ib_half + q_rest * ib_one) < kSeriesTruncation) {
            return std::clamp(base + 0.5 * sum, 0.0, 1.0);
        }

        const double a_half = jd + 0.5;
        const double a_one = jd + 1.0;
        ib_half -= std::exp(a_half * log_y + half_nu * log_w - log_gamma(a_half + 1.0) -
                            log_gamma(half_nu) + log_gamma(a_half + half_nu));
        ib_one -= std::exp(a_one * log_y + half_nu * log_w - log_gamma(a_one + 1.0) -
                           log_gamma(half_nu) + log_gamma(a_one + half_nu));
        ib_half = std::max(ib_half, 0.0);
        ib_one = std::max(ib_one, 0.0);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// P(T' <= x) = E[ Phi(x * S - delta) ], S = sqrt(V / nu), V ~ chi^2_nu,
// integrated over the density of S.
inline double noncentral_t_cdf_integral(double x, double nu, double delta) {
    const double log_norm = std::log(2.0) + 0.5 * nu * std::log(0.5 * nu) - log_gamma(0.5 * nu);
    auto integrand = [&](double s) {
        if (s <= 0.0) return 0.0;
        const double log_density = log_norm + (nu - 1.0) * std::log(s) - 0.5 * nu * s * s;
        return normal_cdf(x * s - delta) * std::exp(log_density);
    };
    const double spread = 1.0 / std::sqrt(2.0 * nu);
    const double hi = std::max(1.0 + 40.0 * spread, std::sqrt(80.0 / nu) + 1.0);
    const double lo = std::max(0.0, 1.0 - 40.0 * spread);
    // Split at the mode so the peak is resolved for large nu.
    const double mode = nu > 1.0 ? std::sqrt((nu - 1.0) / nu) : 0.0;
    double total = 0.0;
    if (mode > lo) total += integrate(integrand, lo, mode, 1e-14);
    total += integrate(integrand, std::max(lo, mode), hi, 1e-14);
    return std::clamp(total, 0.0, 1.0);
}

inline double noncentral_t_cdf_nonneg(double x, double nu, double delta) {
    if (std::fabs(delta) <= kSeriesNcpLimit) {
        const double series = noncentral_t_cdf_series(x, nu, delta);
        if (!std::isnan(series)) return series;
    }
    return noncentral_t_cdf_integral(x, nu, delta);
}

}  // namespace detail

/// P(T' <= x) for a noncentral Student-t variable.
inline double noncentral_t_cdf(double x, DegreesOfFreedom df, NoncentralityParameter ncp) {
    if (!std::isfinite(x)) throw DomainError("noncentral_t_cdf: x must be finite");
    const double delta = ncp.value();
    if (delta == 0.0) return t_cdf(x, df);
    if (x >= 0.0) return detail::noncentral_t_cdf_nonneg(x, df.value(), delta);
    return 1.0 - detail::noncentral_t_cdf_nonneg(-x, df.value(), -delta);
}

/// p-th quantile of the noncentral Student-t distribution.
inline double noncentral_t_quantile(double p, DegreesOfFreedom df, NoncentralityParameter ncp) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("noncentral_t_quantile: p must lie in (0, 1)");
    }
    if (ncp.value() == 0.0) return t_quantile(p, df);
    auto g = [&](double x) { return noncentral_t_cdf(x, df, ncp) - p; };
    const double guess = t_quantile(p, df) + ncp.value();
    double step = std::max(1.0, 0.25 * std::fabs(guess));
    double lo = guess - step;
    double hi = guess + step;
    double g_lo = g(lo);
    double g_hi = g(hi);
    while (g_lo > 0.0) {
        hi = lo;
        g_hi = g_lo;
        step *= 2.0;
        lo -= step;
        if (!std::isfinite(lo)) throw DomainError("noncentral_t_quantile: bracket overflow");
        g_lo = g(lo);
    }
    while (g_hi < 0.0) {
        lo = hi;
        g_lo = g_hi;
        step *= 2.0;
        hi += step;
        if (!std::isfinite(hi)) throw DomainError("noncentral_t_quantile: bracket overflow");
        g_hi = g(hi);
    }
    return detail::bracketed_root(g, lo, hi, g_lo, g_hi, 1e-13);
}

}  // namespace algocmp
