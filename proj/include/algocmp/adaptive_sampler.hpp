#pragma once

// Adaptive allocation of runs of two algorithms on one instance.
//
// After n0 runs of each algorithm, one run at a time is added until the
// standard error of the paired difference drops to se_max or the total
// n1 + n2 reaches n_max. Algorithm 1 gets the next run iff n1 / n2 < r_opt,
// the SE-minimising ratio for the chosen difference kind; ties go to
// algorithm 2.
//
// Run k of algorithm a (a = 0, 1) on the instance uses the seed
// derive_seed(instance_seed, a, k), so each run's seed depends only on its
// position and never on the allocation path.

#include <cstdint>
#include <string>
#include <vector>

#include "algocmp/algorithm_interface.hpp"
#include "algocmp/design.hpp"
#include "algocmp/errors.hpp"
#include "algocmp/paired_estimators.hpp"
#include "algocmp/random.hpp"

namespace algocmp {

struct TraceEntry {
    std::int64_t n1 = 0;
    std::int64_t n2 = 0;
    double se = 0.0;
    SeMethod method = SeMethod::parametric;
};

struct SamplingOutcome {
    InstanceSample sample1;
    InstanceSample sample2;
    PairedDifference diff;
    int iterations = 0;
    std::vector<TraceEntry> se_trace;
    bool switched_to_bootstrap = false;
    /// Seeds of every run, algorithm 1's runs first.
    std::vector<std::uint64_t> run_seeds1;
    std::vector<std::uint64_t> run_seeds2;
};

inline std::uint64_t run_seed(std::uint64_t instance_seed, int algorithm_index,
                              std::int64_t run_index) noexcept {
    return derive_seed(instance_seed, static_cast<std::uint64_t>(algorithm_index),
                       static_cast<std::uint64_t>(run_index));
}

/// Which algorithm receives the next run: 0 for algorithm 1, 1 for algorithm 2.
inline int next_allocation(std::int64_t n1, std::int64_t n2, double r_opt,
                           bool force_balance = false) noexcept {
    if (force_balance) return n1 <= n2 ? 0 : 1;
    return static_cast<double>(n1) / static_cast<double>(n2) < r_opt ? 0 : 1;
}

namespace detail {

class InstanceSampler {
public:
    InstanceSampler(const AlgorithmRunner& r1, const AlgorithmRunner& r2,
                    const InstanceRef& instance, const SamplingConfig& cfg, std::uint64_t seed)
        : runners_{&r1, &r2}, instance_(instance), cfg_(cfg), seed_(seed),
          method_(cfg.se_method) {}

    SamplingOutcome run() {
        cfg_.validate();
        for (int k = 0; k < cfg_.n0; ++k) draw(0);
        for (int k = 0; k < cfg_.n0; ++k) draw(1);
        double se = current_se();
        record(se);
        while (se > cfg_.se_max && total() < cfg_.n_max) {
            const int target = next_allocation(n(0), n(1), ratio(), cfg_.force_balance);
            const std::int64_t room = cfg_.n_max - total();
            const std::int64_t steps = std::min<std::int64_t>(cfg_.batch, room);
            for (std::int64_t s = 0; s < steps; ++s) draw(target);
            ++out_.iterations;
            se = current_se();
            record(se);
        }
        out_.diff.instance_id = instance_.id;
        out_.diff.phi_hat = phi(out_.sample1, out_.sample2, cfg_.diff_kind);
        out_.diff.se_hat = se;
        out_.diff.n1 = n(0);
        out_.diff.n2 = n(1);
        out_.diff.diff_kind = cfg_.diff_kind;
        out_.diff.se_method = method_;
        out_.diff.budget_exhausted = se > cfg_.se_max;
        return std::move(out_);
    }

private:
    std::int64_t n(int a) const noexcept {
        return static_cast<std::int64_t>(a == 0 ? out_.sample1.size() : out_.sample2.size());
    }
    std::int64_t total() const noexcept { return n(0) + n(1); }

    void draw(int a) {
        const std::int64_t k = n(a);
        const std::uint64_t s = run_seed(seed_, a, k);
        RunResult r;
        try {
            r = runners_[a]->run(instance_, s);
        } catch (const RunnerError& e) {
            throw RunnerError("instance '" + instance_.id + "', algorithm '" +
                                  runners_[a]->alias() + "', run " + std::to_string(k) + ": " +
                                  e.what(),
                              e.output_excerpt());
        }
        if (!std::isfinite(r.value)) {
            throw RunnerError("instance '" + instance_.id + "', algorithm '" +
                              runners_[a]->alias() + "', run " + std::to_string(k) +
                              ": non-finite performance value");
        }
        (a == 0 ? out_.sample1 : out_.sample2).push(r.value);
        (a == 0 ? out_.run_seeds1 : out_.run_seeds2).push_back(s);
    }

    void check_reference() const {
        if (cfg_.diff_kind == DiffKind::percent && !(out_.sample1.mean() > 0.0)) {
            throw AssumptionViolation("instance '" + instance_.id +
                                      "': percent differences need a positive mean for "
                                      "algorithm 1 (got " +
                                      std::to_string(out_.sample1.mean()) +
                                      "); use simple differences instead");
        }
    }

    double current_se() {
        check_reference();
        if (method_ == SeMethod::parametric) {
            try {
                return se_parametric(out_.sample1, out_.sample2, cfg_.diff_kind);
            } catch (const DegenerateRatioError&) {
                method_ = SeMethod::bootstrap;
                out_.switched_to_bootstrap = true;
            }
        }
        BootstrapConfig boot = cfg_.bootstrap;
        boot.rng_seed = derive_seed(seed_, {kBootstrapDomain, cfg_.bootstrap.rng_seed,
                                            static_cast<std::uint64_t>(out_.iterations)});
        return bootstrap_se(out_.sample1, out_.sample2, cfg_.diff_kind, boot);
    }

    double ratio() const { return optimal_ratio(out_.sample1, out_.sample2, cfg_.diff_kind); }

    void record(double se) { out_.se_trace.push_back({n(0), n(1), se, method_}); }

    const AlgorithmRunner* runners_[2];
    const InstanceRef& instance_;
    SamplingConfig cfg_;
    std::uint64_t seed_;
    SeMethod method_;
    SamplingOutcome out_;
};

}  // namespace detail

/// Sample both algorithms on one instance until the SE budget or the run
/// budget is met.
inline SamplingOutcome calc_nreps(const AlgorithmRunner& runner1, const AlgorithmRunner& runner2,
                                  const InstanceRef& instance, const SamplingConfig& cfg,
                                  std::uint64_t seed) {
    return detail::InstanceSampler(runner1, runner2, instance, cfg, seed).run();
}

}  // namespace algocmp
