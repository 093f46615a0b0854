#pragma once

// Per-instance estimates of the difference in mean performance between two
// algorithms, their standard errors, and the sample-size ratios that
// minimise total runs for a given standard error.
//
// Simple difference:   phi = mean2 - mean1
// Percent difference:  phi = (mean2 - mean1) / mean1, requiring mean1 > 0
//
// The percent-difference SE is the unbalanced, covariance-free form of
// Fieller's estimator:
//   se = |phi_pct| * sqrt(c1 / n1 + c2 / n2)
//   c1 = s1^2 (phi_simple^-2 + mean1^-2),  c2 = s2^2 phi_simple^-2

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "algocmp/design.hpp"
#include "algocmp/errors.hpp"
#include "algocmp/random.hpp"

namespace algocmp {

/// Observations of one algorithm on one instance with running mean and
/// variance (Welford), so appending a run is O(1).
class InstanceSample {
public:
    InstanceSample() = default;

    explicit InstanceSample(std::span<const double> values) {
        observations_.reserve(values.size());
        for (double v : values) push(v);
    }

    InstanceSample(std::initializer_list<double> values)
        : InstanceSample(std::span<const double>(values.begin(), values.size())) {}

    void push(double value) {
        if (!std::isfinite(value)) throw DomainError("observation must be finite");
        observations_.push_back(value);
        const double n = static_cast<double>(observations_.size());
        const double delta = value - mean_;
        mean_ += delta / n;
        m2_ += delta * (value - mean_);
    }

    std::size_t size() const noexcept { return observations_.size(); }
    bool empty() const noexcept { return observations_.empty(); }
    const std::vector<double>& observations() const noexcept { return observations_; }

    double mean() const {
        if (empty()) throw DomainError("mean of an empty sample");
        return mean_;
    }

    /// Sample variance with n - 1 denominator; requires n >= 2.
    double variance() const {
        if (size() < 2) throw DomainError("variance needs at least 2 observations");
        return std::max(0.0, m2_ / static_cast<double>(size() - 1));
    }

    double sd() const { return std::sqrt(variance()); }

private:
    std::vector<double> observations_;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct PairedDifference {
    std::string instance_id;
    double phi_hat = 0.0;
    double se_hat = 0.0;
    std::int64_t n1 = 0;
    std::int64_t n2 = 0;
    DiffKind diff_kind = DiffKind::simple;
    SeMethod se_method = SeMethod::parametric;
    bool budget_exhausted = false;
};

struct FiellerCoefficients {
    double c1 = 0.0;
    double c2 = 0.0;
};

struct PercentSe {
    double se = 0.0;
    FiellerCoefficients coefficients;
};

namespace detail {

inline void require_nonempty(const InstanceSample& s1, const InstanceSample& s2) {
    if (s1.empty() || s2.empty()) throw DomainError("paired difference of an empty sample");
}

inline void require_two(const InstanceSample& s1, const InstanceSample& s2) {
    if (s1.size() < 2 || s2.size() < 2) {
        throw DomainError("standard error needs at least 2 observations per algorithm");
    }
}

inline void require_positive_reference(double mean1) {
    if (!(mean1 > 0.0)) {
        throw AssumptionViolation(
            "percent differences need a positive mean for algorithm 1 (got " +
            std::to_string(mean1) + "); use simple differences instead");
    }
}

inline double percent_of_means(double mean1, double mean2) { return (mean2 - mean1) / mean1; }

}  // namespace detail

inline double phi_simple(const InstanceSample& s1, const InstanceSample& s2) {
    detail::require_nonempty(s1, s2);
    return s2.mean() - s1.mean();
}

inline double phi_percent(const InstanceSample& s1, const InstanceSample& s2) {
    detail::require_nonempty(s1, s2);
    detail::require_positive_reference(s1.mean());
    return detail::percent_of_means(s1.mean(), s2.mean());
}

inline double phi(const InstanceSample& s1, const InstanceSample& s2, DiffKind kind) {
    return kind == DiffKind::simple ? phi_simple(s1, s2) : phi_percent(s1, s2);
}

inline double se_simple(const InstanceSample& s1, const InstanceSample& s2) {
    detail::require_two(s1, s2);
    return std::sqrt(s1.variance() / static_cast<double>(s1.size()) +
                     s2.variance() / static_cast<double>(s2.size()));
}

inline FiellerCoefficients fieller_coefficients(const InstanceSample& s1,
                                                const InstanceSample& s2) {
    detail::require_two(s1, s2);
    detail::require_positive_reference(s1.mean());
    const double diff = s2.mean() - s1.mean();
    if (diff == 0.0) {
        throw DegenerateRatioError("percent-difference SE is undefined when the means coincide");
    }
    const double inv_diff2 = 1.0 / (diff * diff);
    const double inv_mean2 = 1.0 / (s1.mean() * s1.mean());
    return {s1.variance() * (inv_diff2 + inv_mean2), s2.variance() * inv_diff2};
}

inline PercentSe se_percent(const InstanceSample& s1, const InstanceSample& s2) {
    const FiellerCoefficients c = fieller_coefficients(s1, s2);
    const double pct = detail::percent_of_means(s1.mean(), s2.mean());
    const double se = std::fabs(pct) * std::sqrt(c.c1 / static_cast<double>(s1.size()) +
                                                 c.c2 / static_cast<double>(s2.size()));
    return {se, c};
}

/// Balanced Fieller SE including the covariance term. Reference only: the
/// covariance pairs x1[k] with x2[k] - x1[k], which presumes a pairing of
/// runs that independent sampling does not provide.
inline double fieller_se_balanced(std::span<const double> x1, std::span<const double> x2) {
    if (x1.size() != x2.size()) throw DomainError("balanced Fieller SE needs n1 == n2");
    if (x1.size() < 2) throw DomainError("balanced Fieller SE needs at least 2 observations");
    const InstanceSample s1(x1);
    const InstanceSample s2(x2);
    detail::require_positive_reference(s1.mean());
    const double n = static_cast<double>(x1.size());
    const double diff = s2.mean() - s1.mean();
    if (diff == 0.0) throw DegenerateRatioError("balanced Fieller SE undefined for equal means");
    double cov = 0.0;
    for (std::size_t k = 0; k < x1.size(); ++k) {
        cov += (x1[k] - s1.mean()) * ((x2[k] - x1[k]) - diff);
    }
    cov /= (n - 1.0);
    const double mean1 = s1.mean();
    const double inner = (s1.variance() / n) / (mean1 * mean1) +
                         (s1.variance() / n + s2.variance() / n) / (diff * diff) +
                         (2.0 / n) * cov / (diff * mean1);
    return std::fabs(diff / mean1) * std::sqrt(std::max(0.0, inner));
}

/// Standard error of the chosen difference estimator.
inline double se_parametric(const InstanceSample& s1, const InstanceSample& s2, DiffKind kind) {
    return kind == DiffKind::simple ? se_simple(s1, s2) : se_percent(s1, s2).se;
}

namespace detail {

inline double sd_ratio(double sd1, double sd2) {
    if (sd2 == 0.0) return sd1 == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return sd1 / sd2;
}

}  // namespace detail

/// n1 / n2 minimising n1 + n2 for the simple-difference SE: s1 / s2.
/// Returns +inf when only algorithm 2 has zero spread, 1 when both do.
inline double optimal_ratio_simple(const InstanceSample& s1, const InstanceSample& s2) {
    detail::require_two(s1, s2);
    return detail::sd_ratio(s1.sd(), s2.sd());
}

/// n1 / n2 minimising n1 + n2 for the percent SE: (s1 / s2) sqrt(1 + phi_pct^2).
inline double optimal_ratio_percent(const InstanceSample& s1, const InstanceSample& s2) {
    detail::require_two(s1, s2);
    detail::require_positive_reference(s1.mean());
    const double pct = detail::percent_of_means(s1.mean(), s2.mean());
    const double base = detail::sd_ratio(s1.sd(), s2.sd());
    if (s1.sd() == 0.0 && s2.sd() == 0.0) return base;
    return base * std::sqrt(1.0 + pct * pct);
}

inline double optimal_ratio(const InstanceSample& s1, const InstanceSample& s2, DiffKind kind) {
    return kind == DiffKind::simple ? optimal_ratio_simple(s1, s2) : optimal_ratio_percent(s1, s2);
}

/// Continuous solution of min n1 + n2 s.t. SE(n1, n2) = se_max, with the
/// sample spreads treated as known.
struct ContinuousAllocation {
    double n1 = 0.0;
    double n2 = 0.0;
    double total() const noexcept { return n1 + n2; }
};

inline ContinuousAllocation optimal_allocation_simple(double sd1, double sd2, double se_max) {
    if (!(se_max > 0.0)) throw DomainError("se_max must be positive");
    const double scale = (sd1 + sd2) / (se_max * se_max);
    return {sd1 * scale, sd2 * scale};
}

inline ContinuousAllocation optimal_allocation_percent(const FiellerCoefficients& c,
                                                       double phi_pct, double se_max) {
    if (!(se_max > 0.0)) throw DomainError("se_max must be positive");
    const double cross = std::sqrt(c.c1 * c.c2);
    const double k = phi_pct * phi_pct / (se_max * se_max);
    return {k * (c.c1 + cross), k * (c.c2 + cross)};
}

namespace detail {

inline double resampled_mean(const std::vector<double>& x, PhiloxStream& rng) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += x[rng.uniform_index(x.size())];
    return sum / static_cast<double>(x.size());
}

inline double sample_sd(const std::vector<double>& v) {
    double mean = 0.0;
    double m2 = 0.0;
    double n = 0.0;
    for (double x : v) {
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    return v.size() < 2 ? 0.0 : std::sqrt(std::max(0.0, m2 / (n - 1.0)));
}

}  // namespace detail

/// Bootstrap SE of the difference estimator: standard deviation of R
/// resampled estimates. Under percent differences, resamples whose mean
/// for algorithm 1 is not positive are redrawn (at most 100 R times).
inline double bootstrap_se(const InstanceSample& s1, const InstanceSample& s2, DiffKind kind,
                           const BootstrapConfig& cfg) {
    detail::require_two(s1, s2);
    cfg.validate();
    PhiloxStream rng(cfg.rng_seed);
    std::vector<double> estimates;
    estimates.reserve(static_cast<std::size_t>(cfg.resamples));
    const std::int64_t max_rejections = 100LL * cfg.resamples;
    std::int64_t rejections = 0;
    while (static_cast<int>(estimates.size()) < cfg.resamples) {
        const double m1 = detail::resampled_mean(s1.observations(), rng);
        const double m2 = detail::resampled_mean(s2.observations(), rng);
        if (kind == DiffKind::simple) {
            estimates.push_back(m2 - m1);
            continue;
        }
        if (!(m1 > 0.0)) {
            if (++rejections > max_rejections) {
                throw AssumptionViolation(
                    "bootstrap: too many resamples with nonpositive mean for algorithm 1");
            }
            continue;
        }
        estimates.push_back(detail::percent_of_means(m1, m2));
    }
    return detail::sample_sd(estimates);
}

/// Bootstrap sampling distribution of the mean: R resampled means.
inline std::vector<double> bootstrap_sdm(std::span<const double> sample,
                                         const BootstrapConfig& cfg) {
    if (sample.empty()) throw DomainError("bootstrap_sdm: empty sample");
    if (sample.size() < 2) throw DomainError("bootstrap_sdm needs at least 2 observations");
    cfg.validate();
    const std::vector<double> data(sample.begin(), sample.end());
    PhiloxStream rng(cfg.rng_seed);
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(cfg.resamples));
    for (int r = 0; r < cfg.resamples; ++r) means.push_back(detail::resampled_mean(data, rng));
    return means;
}

}  // namespace algocmp
