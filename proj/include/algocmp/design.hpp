#pragma once

// Power and sample-size calculations for the paired comparison of two
// algorithms over a problem class.
//
// The test sample is the vector of per-instance paired differences, so the
// t statistic has N - 1 degrees of freedom and, under an effect of
// standardized size d, a noncentrality of d * sqrt(N).

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "algocmp/distributions.hpp"
#include "algocmp/errors.hpp"

namespace algocmp {

/// Direction of the alternative hypothesis. `less` is H1: mu_D < mu0, the
/// natural form for "smaller is better" indicators; `greater` reverses it.
/// Power and sample-size calculation treat both one-sided forms alike.
enum class Alternative { two_sided, less, greater };

enum class TestFamily { t_test, wilcoxon, sign };

inline bool is_one_sided(Alternative a) noexcept { return a != Alternative::two_sided; }

inline std::string_view to_string(Alternative a) noexcept {
    switch (a) {
        case Alternative::two_sided: return "two_sided";
        case Alternative::less: return "less";
        case Alternative::greater: return "greater";
    }
    return "?";
}

inline std::string_view to_string(TestFamily t) noexcept {
    switch (t) {
        case TestFamily::t_test: return "t_test";
        case TestFamily::wilcoxon: return "wilcoxon";
        case TestFamily::sign: return "sign";
    }
    return "?";
}

/// Accepts "two_sided"/"two-sided", "one_sided"/"one-sided" (= less),
/// "less", "greater".
inline Alternative parse_alternative(std::string_view s) {
    if (s == "two_sided" || s == "two-sided" || s == "two.sided") return Alternative::two_sided;
    if (s == "one_sided" || s == "one-sided" || s == "one.sided" || s == "less") {
        return Alternative::less;
    }
    if (s == "greater") return Alternative::greater;
    throw DomainError("unknown alternative '" + std::string(s) + "'");
}

inline TestFamily parse_test_family(std::string_view s) {
    if (s == "t" || s == "t_test" || s == "t-test" || s == "t.test") return TestFamily::t_test;
    if (s == "wilcoxon") return TestFamily::wilcoxon;
    if (s == "sign" || s == "binomial") return TestFamily::sign;
    throw DomainError("unknown test family '" + std::string(s) + "'");
}

/// Asymptotic relative efficiency of the nonparametric tests w.r.t. the t test.
inline constexpr double kWilcoxonAre = 0.86;
inline constexpr double kSignAre = 0.637;

struct ComparisonDesign {
    double alpha = 0.05;
    double power_target = 0.8;
    double mres_d = 0.5;
    Alternative alternative = Alternative::two_sided;
    TestFamily test_family = TestFamily::t_test;
    double mu0 = 0.0;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
        if (!(power_target > 0.0 && power_target < 1.0)) {
            throw DomainError("power target must lie in (0, 1)");
        }
        if (!(mres_d > 0.0) || !std::isfinite(mres_d)) {
            throw DomainError("minimally relevant effect size d must be positive");
        }
        if (!std::isfinite(mu0)) throw DomainError("mu0 must be finite");
    }
};

/// d* from an unstandardized MRES and an upper bound on the total SD.
inline double mres_from_delta(double delta, double sigma_bound) {
    if (!(sigma_bound > 0.0) || !std::isfinite(sigma_bound)) {
        throw DomainError("an upper bound for the total standard deviation must be positive");
    }
    if (!std::isfinite(delta)) throw DomainError("delta must be finite");
    return std::fabs(delta) / sigma_bound;
}

/// Split of the total SD of the paired differences into the across-instance
/// part and the within-instance estimation error.
struct EffectSizeDecomposition {
    double delta = 0.0;
    double sigma_phi = 0.0;
    double sigma_eps = 0.0;

    double sigma_total() const noexcept { return std::hypot(sigma_phi, sigma_eps); }
};

/// delta / sqrt(sigma_phi^2 + sigma_eps^2), signed like delta.
inline double standardized_effect(const EffectSizeDecomposition& e) {
    if (e.sigma_phi < 0.0 || e.sigma_eps < 0.0) {
        throw DomainError("standard deviations must be nonnegative");
    }
    const double total = e.sigma_total();
    if (!(total > 0.0)) throw DomainError("total standard deviation is zero");
    return e.delta / total;
}

struct SampleSizeResult {
    std::int64_t n_instances = 0;
    std::int64_t n_instances_t = 0;  ///< t-test basis before the ARE adjustment
    double achieved_power = 0.0;
    TestFamily test_family = TestFamily::t_test;
    double ncp_at_n = 0.0;
};

inline constexpr std::int64_t kMaxInstances = 1'000'000;

/// Power of the paired t test with n instances against effect d.
inline double calc_power(std::int64_t n_instances, double d, double alpha,
                         Alternative alternative) {
    if (n_instances < 2) throw DomainError("power needs at least 2 instances");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (!std::isfinite(d)) throw DomainError("effect size must be finite");
    const DegreesOfFreedom df(static_cast<double>(n_instances - 1));
    const NoncentralityParameter ncp(std::fabs(d) * std::sqrt(static_cast<double>(n_instances)));
    if (alternative == Alternative::two_sided) {
        const double upper = t_quantile(1.0 - 0.5 * alpha, df);
        const double accept = noncentral_t_cdf(upper, df, ncp) - noncentral_t_cdf(-upper, df, ncp);
        return std::clamp(1.0 - accept, 0.0, 1.0);
    }
    const double upper = t_quantile(1.0 - alpha, df);
    return std::clamp(1.0 - noncentral_t_cdf(upper, df, ncp), 0.0, 1.0);
}

/// Uses only the design's alpha and alternative.
inline double calc_power(std::int64_t n_instances, double d, const ComparisonDesign& design) {
    return calc_power(n_instances, d, design.alpha, design.alternative);
}

namespace detail {

inline std::int64_t are_adjusted(std::int64_t n_t, double are) {
    // The small offset keeps exact quotients (e.g. 43 / 0.86 = 50) from
    // rounding up past themselves.
    return static_cast<std::int64_t>(std::ceil(static_cast<double>(n_t) / are - 1e-9));
}

}  // namespace detail

/// Smallest number of instances reaching the design's power target.
inline SampleSizeResult calc_instances(const ComparisonDesign& design) {
    design.validate();
    auto power_at = [&](std::int64_t n) { return calc_power(n, design.mres_d, design); };

    // Double until the target is met, then bisect inside the last bracket.
    std::int64_t lo = 1;  // power(lo) < target (or lo below the minimum N)
    std::int64_t hi = 2;
    while (power_at(hi) < design.power_target) {
        lo = hi;
        if (hi >= kMaxInstances) {
            throw DomainError("required number of instances exceeds " +
                              std::to_string(kMaxInstances));
        }
        hi = std::min(hi * 2, kMaxInstances);
    }
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (power_at(mid) >= design.power_target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    SampleSizeResult result;
    result.n_instances_t = hi;
    result.test_family = design.test_family;
    switch (design.test_family) {
        case TestFamily::t_test: result.n_instances = hi; break;
        case TestFamily::wilcoxon: result.n_instances = detail::are_adjusted(hi, kWilcoxonAre); break;
        case TestFamily::sign: result.n_instances = detail::are_adjusted(hi, kSignAre); break;
    }
    result.achieved_power = power_at(result.n_instances);
    result.ncp_at_n = design.mres_d * std::sqrt(static_cast<double>(result.n_instances));
    return result;
}

struct PowerPoint {
    double d;
    double power;
};

/// Power over n_points evenly spaced effect sizes in [d_lo, d_hi].
inline std::vector<PowerPoint> power_curve(std::int64_t n_instances, double alpha,
                                           Alternative alternative, double d_lo, double d_hi,
                                           int n_points) {
    if (n_instances < 2) throw DomainError("power curve needs at least 2 instances");
    if (!(d_lo > 0.0) || !(d_hi > d_lo) || !std::isfinite(d_hi)) {
        throw DomainError("effect size range must satisfy 0 < d_lo < d_hi");
    }
    if (n_points < 2) throw DomainError("power curve needs at least 2 points");
    std::vector<PowerPoint> curve;
    curve.reserve(static_cast<std::size_t>(n_points));
    const double step = (d_hi - d_lo) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) {
        const double d = (i == n_points - 1) ? d_hi : d_lo + step * i;
        curve.push_back({d, calc_power(n_instances, d, alpha, alternative)});
    }
    return curve;
}

struct PowerHighlight {
    double power_level;
    std::optional<double> d;  ///< empty when the curve never reaches the level
};

/// For each level, the smallest effect size on the curve whose power reaches it.
inline std::vector<PowerHighlight> curve_highlights(const std::vector<PowerPoint>& curve,
                                                    const std::vector<double>& levels) {
    std::vector<PowerHighlight> out;
    out.reserve(levels.size());
    for (double level : levels) {
        PowerHighlight h{level, std::nullopt};
        for (const PowerPoint& pt : curve) {
            if (pt.power >= level) {
                h.d = pt.d;
                break;
            }
        }
        out.push_back(h);
    }
    return out;
}

/// Per-instance sampling parameters of the adaptive sampler.
enum class DiffKind { simple, percent };
enum class SeMethod { parametric, bootstrap };

inline std::string_view to_string(DiffKind k) noexcept {
    return k == DiffKind::simple ? "simple" : "percent";
}
inline std::string_view to_string(SeMethod m) noexcept {
    return m == SeMethod::parametric ? "parametric" : "bootstrap";
}
inline DiffKind parse_diff_kind(std::string_view s) {
    if (s == "simple") return DiffKind::simple;
    if (s == "percent" || s == "perc") return DiffKind::percent;
    throw DomainError("unknown difference kind '" + std::string(s) + "'");
}
inline SeMethod parse_se_method(std::string_view s) {
    if (s == "parametric" || s == "param") return SeMethod::parametric;
    if (s == "bootstrap" || s == "boot") return SeMethod::bootstrap;
    throw DomainError("unknown SE method '" + std::string(s) + "'");
}

struct BootstrapConfig {
    int resamples = 999;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (resamples < 100) throw DomainError("bootstrap needs at least 100 resamples");
    }
};

struct SamplingConfig {
    double se_max = 0.05;
    int n0 = 15;
    int n_max = 200;
    DiffKind diff_kind = DiffKind::simple;
    SeMethod se_method = SeMethod::parametric;
    BootstrapConfig bootstrap{};
    bool force_balance = false;
    int batch = 1;  ///< runs added per loop iteration

    void validate() const {
        if (!(se_max > 0.0) || !std::isfinite(se_max)) throw DomainError("se_max must be positive");
        if (n0 < 2) throw DomainError("n0 must be at least 2");
        if (n_max < 2 * n0) throw DomainError("n_max must be at least 2 * n0");
        if (batch < 1) throw DomainError("batch must be at least 1");
        bootstrap.validate();
    }
};

/// Advisory checks on experimental parameters. Never throws.
inline std::vector<std::string> validate_design(const ComparisonDesign& design,
                                                const SamplingConfig& sampling,
                                                std::optional<double> sigma_total_estimate) {
    std::vector<std::string> warnings;
    if (sigma_total_estimate && *sigma_total_estimate >= 0.0) {
        const double limit = 0.1 * (*sigma_total_estimate) * (*sigma_total_estimate);
        if (sampling.se_max * sampling.se_max > limit) {
            warnings.push_back(
                "se_max^2 = " + std::to_string(sampling.se_max * sampling.se_max) +
                " exceeds 0.1 * sigma^2 = " + std::to_string(limit) +
                "; within-instance error may dominate the total variance");
        }
    }
    if (sampling.n0 < 3) {
        warnings.push_back("n0 = " + std::to_string(sampling.n0) +
                           " is below 3; initial SD estimates will be unreliable");
    }
    (void)design;
    return warnings;
}

}  // namespace algocmp
