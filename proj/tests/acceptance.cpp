// Acceptance checks, one PASS/FAIL line each; exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "algocmp/adaptive_sampler.hpp"
#include "algocmp/design.hpp"
#include "algocmp/distributions.hpp"
#include "algocmp/experiment.hpp"
#include "algocmp/hypothesis_tests.hpp"
#include "algocmp/paired_estimators.hpp"
#include "algocmp/subprocess.hpp"
#include "oracles.hpp"

using namespace algocmp;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

ProcessResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), ALGOCMP_CLI_PATH);
    return run_process(args, 60.0);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome sample_sizes() {
    struct Case {
        std::vector<std::string> args;
        std::string expect;
    };
    const std::vector<Case> cases{
        {{"design", "--power", "0.85", "--d", "0.5", "--alpha", "0.05", "--alternative",
          "two-sided", "--test", "t"},
         "N* = 38\n"},
        {{"design", "--power", "0.85", "--d", "0.5", "--alpha", "0.05", "--alternative",
          "two-sided", "--test", "wilcoxon"},
         "N* = 45\n"},
        {{"design", "--power", "0.8", "--d", "0.5", "--alpha", "0.05", "--alternative",
          "two-sided"},
         "N* = 34\n"}};
    Outcome o{true, ""};
    for (const Case& c : cases) {
        const auto t0 = Clock::now();
        const auto r = cli(c.args);
        const double dt = seconds_since(t0);
        const bool ok = r.exit_code == 0 && r.stdout_text.find(c.expect) != std::string::npos &&
                        dt < 1.0;
        o.pass = o.pass && ok;
        std::string got = r.stdout_text.substr(0, r.stdout_text.find('\n'));
        o.detail += got + fmt(" (%.3f s); ", dt);
    }
    return o;
}

Outcome power_value() {
    const auto t0 = Clock::now();
    const double p = calc_power(100, 0.25, 0.01, Alternative::less);
    const auto r = cli({"power", "--n", "100", "--d", "0.25", "--alpha", "0.01", "--alternative",
                        "one-sided"});
    const double dt = seconds_since(t0);
    const bool printed = r.stdout_text.find("power = 0.5554571") != std::string::npos;
    return {std::fabs(p - 0.5554571) <= 1e-4 && printed && dt < 1.0,
            fmt("power = %.9f", p) + fmt(", %.3f s", dt)};
}

Outcome highlights() {
    const auto curve = power_curve(100, 0.01, Alternative::less, 0.05, 0.5, 300);
    const auto hs = curve_highlights(curve, {0.25, 0.5, 0.8, 0.95});
    const double expect[] = {0.17, 0.24, 0.32, 0.40};
    Outcome o{true, "d ="};
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const bool ok = hs[i].d && std::fabs(*hs[i].d - expect[i]) <= 0.005;
        o.pass = o.pass && ok;
        o.detail += hs[i].d ? fmt(" %.4f", *hs[i].d) : std::string(" none");
    }
    return o;
}

Outcome kkt() {
    const auto t0 = Clock::now();
    std::mt19937_64 gen(4242);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int bad = 0;
    long worst = 0;
    const int trials = 400;
    for (int trial = 0; trial < trials; ++trial) {
        const double s1 = 0.2 + 5.0 * u(gen);
        const double s2 = 0.2 + 5.0 * u(gen);
        const double x1 = 2.0 + 30.0 * u(gen);
        const double x2 = x1 * (1.0 + (u(gen) < 0.5 ? -1.0 : 1.0) * (0.02 + 0.6 * u(gen)));
        const bool percent = trial % 2 == 1;
        double a = s1 * s1, b = s2 * s2, r = s1 / s2;
        if (percent) {
            // se^2 of the percent difference, Fieller form, as a / n1 + b / n2.
            const double diff = x2 - x1;
            const double pct = diff / x1;
            const double c1 = s1 * s1 * (1.0 / (diff * diff) + 1.0 / (x1 * x1));
            const double c2 = s2 * s2 / (diff * diff);
            a = pct * pct * c1;
            b = pct * pct * c2;
            r = std::sqrt(c1 / c2);
        }
        const double total = 30.0 + 3000.0 * u(gen);
        const double se_max = (std::sqrt(a) + std::sqrt(b)) / std::sqrt(total);
        std::int64_t n1 = 2, n2 = 2;
        while (a / static_cast<double>(n1) + b / static_cast<double>(n2) > se_max * se_max) {
            (next_allocation(n1, n2, r) == 0 ? n1 : n2) += 1;
        }
        const auto g = oracle::grid_min_total(a, b, se_max, 20000);
        const long excess = static_cast<long>(n1 + n2) - g.total();
        worst = std::max(worst, excess);
        if (excess > 2 || excess < 0) ++bad;
    }
    const double dt = seconds_since(t0);
    return {bad == 0 && dt < 60.0, std::to_string(trials) + " configs, worst excess " +
                                       std::to_string(worst) + " runs, " + fmt("%.2f s", dt)};
}

SpecRunner normal_runner(const std::string& alias, double mu, double sigma) {
    return SpecRunner({alias, RunnerKind::synthetic_normal, SyntheticParams{mu, sigma}, true});
}

SamplingConfig sampling(double se_max, int n0, int n_max, DiffKind kind = DiffKind::simple) {
    SamplingConfig c;
    c.se_max = se_max;
    c.n0 = n0;
    c.n_max = n_max;
    c.diff_kind = kind;
    return c;
}

Outcome se_contract() {
    const InstanceRef inst{"inst", SyntheticPayload{}};
    std::mt19937_64 gen(55);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int violations = 0, checked = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const bool percent = rep % 2 == 1;
        const double mu1 = 5.0 + 20.0 * u(gen);
        const double mu2 = mu1 * (0.7 + 0.6 * u(gen));
        const auto r1 = normal_runner("a", mu1, 0.2 + 3.0 * u(gen));
        const auto r2 = normal_runner("b", mu2, 0.2 + 3.0 * u(gen));
        const double se_max = percent ? 0.005 + 0.05 * u(gen) : 0.05 + 0.5 * u(gen);
        const auto cfg = sampling(se_max, 2 + rep % 10, 400,
                                  percent ? DiffKind::percent : DiffKind::simple);
        const auto out = calc_nreps(r1, r2, inst, cfg, static_cast<std::uint64_t>(rep));
        if (out.diff.budget_exhausted) continue;
        ++checked;
        if (!(out.diff.se_hat <= se_max)) ++violations;
    }
    const auto r1 = normal_runner("a", 10, 2);
    const auto r2 = normal_runner("b", 12, 1);
    std::vector<double> ratios;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto out = calc_nreps(r1, r2, inst, sampling(0.1, 10, 100000), 1000 + seed);
        ratios.push_back(static_cast<double>(out.diff.n1) / static_cast<double>(out.diff.n2));
    }
    const double med = oracle::median(ratios);
    return {violations == 0 && checked > 0 && med >= 1.6 && med <= 2.4,
            std::to_string(violations) + " violations in " + std::to_string(checked) +
                " outcomes; median n1/n2 = " + fmt("%.4f", med)};
}

/// Rejection rate of whole experiments on synthetic pools with latent
/// differences phi_j ~ N(delta, sigma_phi) and per-run noise noise_sd.
double rejection_rate(int experiments, double delta, double sigma_phi, double noise_sd,
                      double se_max, std::uint64_t seed_base) {
    ComparisonDesign design;
    design.power_target = 0.8;
    design.mres_d = 0.5;
    int rejected = 0;
    for (int e = 0; e < experiments; ++e) {
        const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(e);
        const SyntheticPool pool = build_synthetic_pool(200, delta, sigma_phi, noise_sd, seed);
        ExperimentPlan plan;
        plan.design = design;
        plan.sampling = sampling(se_max, 5, 1000);
        plan.instance_pool = pool.instances;
        plan.runner1 = std::make_shared<SpecRunner>(pool.algorithm1);
        plan.runner2 = std::make_shared<SpecRunner>(pool.algorithm2);
        plan.master_seed = derive_seed(seed, 0xacce97);
        plan.fingerprint = "acceptance";
        plan.diagnostics_resamples = 100;
        if (run_experiment(plan).report.significant()) ++rejected;
    }
    return static_cast<double>(rejected) / experiments;
}

Outcome calibration() {
    const auto t0 = Clock::now();
    const double d_star = 0.5;
    const double sigma_phi = 1.0;
    const double se_max = 0.25;
    // The observed differences carry estimation noise of about se* on top of
    // the latent spread.
    const double sigma_total = std::sqrt(sigma_phi * sigma_phi + se_max * se_max);
    const std::int64_t n_star = 34;
    const double target = calc_power(n_star, d_star, 0.05, Alternative::two_sided);
    const int n_alt = 1000, n_null = 5000;
    const double alt = rejection_rate(n_alt, d_star * sigma_total, sigma_phi, 1.0, se_max, 1'000'000);
    const double null = rejection_rate(n_null, 0.0, sigma_phi, 1.0, se_max, 2'000'000);
    const double dt = seconds_since(t0);
    const bool ok = std::fabs(alt - target) <= 0.05 && std::fabs(null - 0.05) <= 0.015 && dt < 300.0;
    return {ok, fmt("d = d*: %.4f", alt) + fmt(" vs %.4f", target) + " (" + std::to_string(n_alt) +
                    fmt(" experiments); d = 0: %.4f", null) + " (" + std::to_string(n_null) +
                    fmt(" experiments); %.1f s", dt)};
}

InstanceSample normal_sample(double mu, double sigma, int n, std::uint64_t seed) {
    PhiloxStream rng(seed);
    InstanceSample s;
    for (int i = 0; i < n; ++i) s.push(mu + sigma * rng.normal());
    return s;
}

Outcome bootstrap_agreement() {
    std::string detail;
    bool ok = true;
    for (DiffKind kind : {DiffKind::simple, DiffKind::percent}) {
        double total = 0.0;
        for (int seed = 0; seed < 50; ++seed) {
            const auto s1 = normal_sample(10, 1, 100, 7000 + static_cast<std::uint64_t>(seed));
            const auto s2 = normal_sample(12, 2, 100, 8000 + static_cast<std::uint64_t>(seed));
            const double param = se_parametric(s1, s2, kind);
            const double boot = bootstrap_se(s1, s2, kind, {9999, static_cast<std::uint64_t>(seed)});
            total += std::fabs(boot - param) / param;
        }
        const double mean = total / 50.0;
        ok = ok && mean < 0.1;
        detail += std::string(to_string(kind)) + fmt(" %.4f; ", mean);
    }
    return {ok, "mean relative discrepancy " + detail};
}

Outcome nonparametric_oracles() {
    std::mt19937_64 gen(12);
    std::normal_distribution<double> z(0.3, 1.0);
    int mismatches = 0, cases = 0;
    for (int rep = 0; rep < 400; ++rep) {
        const std::size_t n = 2 + static_cast<std::size_t>(rep % 11);
        std::vector<double> x(n);
        for (double& v : x) v = z(gen);
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return std::fabs(x[a]) < std::fabs(x[b]); });
        std::vector<double> ranks(n);
        for (std::size_t k = 0; k < n; ++k) ranks[idx[k]] = static_cast<double>(k + 1);
        double w = 0.0;
        int k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (x[i] > 0.0) {
                w += ranks[i];
                ++k;
            }
        }
        const auto wt = oracle::signrank_enumerate(ranks, w);
        const auto bt = oracle::binomial_half_tails(static_cast<int>(n), k);
        for (Alternative alt : {Alternative::two_sided, Alternative::less, Alternative::greater}) {
            auto pick = [&](std::pair<double, double> t) {
                if (alt == Alternative::less) return t.first;
                if (alt == Alternative::greater) return t.second;
                return std::min(1.0, 2.0 * std::min(t.first, t.second));
            };
            const auto wr = wilcoxon_signed_rank(x, 0.0, 0.05, alt);
            const auto sr = sign_test(x, 0.0, 0.05, alt);
            cases += 2;
            if (!wr.exact || wr.p_value != pick(wt)) ++mismatches;
            if (sr.p_value != pick(bt)) ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches in " + std::to_string(cases) +
                                 " p-values"};
}

Outcome published_inference() {
    const double ci_lo = -0.517, ci_hi = -0.242, mean = -0.379;
    const DegreesOfFreedom df(33);
    const double half_width = (ci_hi - ci_lo) / 2.0;
    const double se = half_width / t_quantile(0.975, df);
    const double t0 = mean / se;
    const double p = 2.0 * t_cdf(-std::fabs(t0), df);
    const double ratio = std::max(p, 2.90e-6) / std::min(p, 2.90e-6);
    return {ratio <= 1.05, fmt("t0 = %.4f", t0) + fmt(", p = %.4g", p) +
                               fmt(", ratio to 2.90e-6 = %.4f (limit 1.05)", ratio)};
}

Outcome determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "algocmp-acceptance";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "config.json") << R"({
      "design": {"alpha": 0.05, "power": 0.8, "d": 0.5},
      "sampling": {"se_max": 0.2, "n0": 5, "n_max": 300},
      "synthetic_pool": {"n": 60, "delta": 0.4, "sigma_phi": 1, "noise_sd": 1, "seed": 17},
      "master_seed": 314159, "workers": 4, "output_dir": "out"})";
    std::vector<std::string> tables;
    for (const char* workers : {"4", "1"}) {
        const auto r = cli({"run", "--config", (dir / "config.json").string(), "--fresh",
                            "--workers", workers});
        if (r.exit_code != 0) return {false, "run exited with " + std::to_string(r.exit_code)};
        tables.push_back(slurp(dir / "out" / "results.tsv"));
    }
    const bool same = tables[0] == tables[1] && !tables[0].empty();
    return {same, std::to_string(tables[0].size()) + " bytes, " +
                      (same ? "identical" : "different")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
        {"1 sample sizes 38/45/34", sample_sizes},
        {"2 power at N=100, d=0.25", power_value},
        {"3 power curve highlights", highlights},
        {"4 allocation rule vs grid optimum", kkt},
        {"5 adaptive sampler SE contract and ratio", se_contract},
        {"6 Monte Carlo calibration", calibration},
        {"7 bootstrap vs parametric SE", bootstrap_agreement},
        {"8 nonparametric exact p-values", nonparametric_oracles},
        {"9 replay of published inference", published_inference},
        {"10 deterministic run", determinism},
    };
    int failed = 0;
    for (const auto& [name, check] : checks) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(checks.size()) - failed, checks.size());
    return failed == 0 ? 0 : 1;
}
