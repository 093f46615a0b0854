#pragma once

// Full comparison: choose the number of instances, sample them from the pool,
// run the adaptive sampler on each, then test the vector of differences.
//
// Seeds: instance j of the pool (by pool position) is sampled with
//   derive_seed(master_seed, kInstanceDomain, j)
// and the selection shuffle uses derive_seed(master_seed, kSelectionDomain).
// Appending instances to the pool therefore never changes the runs made on
// earlier ones.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "algocmp/adaptive_sampler.hpp"
#include "algocmp/algorithm_interface.hpp"
#include "algocmp/design.hpp"
#include "algocmp/errors.hpp"
#include "algocmp/hypothesis_tests.hpp"
#include "algocmp/journal.hpp"
#include "algocmp/random.hpp"

namespace algocmp {

struct ExperimentPlan {
    ComparisonDesign design;
    SamplingConfig sampling;
    std::vector<InstanceRef> instance_pool;
    std::shared_ptr<const AlgorithmRunner> runner1;
    std::shared_ptr<const AlgorithmRunner> runner2;
    std::uint64_t master_seed = 0;
    bool use_all_instances = false;
    int workers = 1;
    /// Checkpoint journal; none means no checkpointing.
    std::optional<std::filesystem::path> journal;
    /// Discard an existing journal instead of resuming from it.
    bool fresh = false;
    /// Identifies the configuration a journal belongs to.
    std::string fingerprint;
    /// Prior estimate of the total SD of the differences, for the se_max check.
    std::optional<double> sigma_estimate;
    int diagnostics_resamples = 999;

    void validate() const {
        design.validate();
        sampling.validate();
        if (instance_pool.empty()) throw DomainError("instance pool is empty");
        if (!runner1 || !runner2) throw DomainError("experiment needs two algorithms");
        if (runner1->alias() == runner2->alias()) {
            throw DomainError("algorithm aliases must differ, both are '" + runner1->alias() + "'");
        }
        std::set<std::string> ids;
        for (const InstanceRef& inst : instance_pool) {
            if (!ids.insert(inst.id).second) throw DomainError("duplicate instance id '" + inst.id + "'");
        }
        if (workers < 1) throw DomainError("workers must be at least 1");
    }
};

struct ExperimentResult {
    TestReport report;
    DiagnosticsBundle diagnostics;
    SampleSizeResult sample_size;
    /// Selected instances in selection order.
    std::vector<std::string> selected;
    std::size_t resumed = 0;   ///< instances taken from the journal
    std::size_t sampled = 0;   ///< instances sampled in this invocation
};

inline std::uint64_t instance_seed(std::uint64_t master_seed, std::size_t pool_index) noexcept {
    return derive_seed(master_seed, kInstanceDomain, static_cast<std::uint64_t>(pool_index));
}

/// Pool positions of k instances drawn uniformly without replacement, in
/// draw order (partial Fisher-Yates).
inline std::vector<std::size_t> select_instances(std::size_t pool_size, std::size_t k,
                                                 std::uint64_t master_seed) {
    if (k > pool_size) throw DomainError("cannot select more instances than the pool holds");
    std::vector<std::size_t> idx(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) idx[i] = i;
    PhiloxStream rng(derive_seed(master_seed, kSelectionDomain));
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(pool_size - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

namespace detail {

inline std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentPlan& plan) {
    plan.validate();
    ExperimentResult result;
    std::vector<std::string> warnings =
        validate_design(plan.design, plan.sampling, plan.sigma_estimate);

    result.sample_size = calc_instances(plan.design);
    const std::size_t pool_size = plan.instance_pool.size();
    const auto n_star = static_cast<std::size_t>(result.sample_size.n_instances);
    if (n_star > pool_size) {
        std::string w = "required N* = " + std::to_string(n_star) + " exceeds the " +
                        std::to_string(pool_size) + " available instances";
        if (pool_size >= 2) {
            w += "; power at N = " + std::to_string(pool_size) + " is " +
                 detail::fmt6(calc_power(static_cast<std::int64_t>(pool_size), plan.design.mres_d,
                                         plan.design));
        }
        warnings.push_back(w);
    }

    std::vector<std::size_t> chosen;
    if (plan.use_all_instances) {
        chosen.resize(pool_size);
        for (std::size_t i = 0; i < pool_size; ++i) chosen[i] = i;
    } else {
        chosen = select_instances(pool_size, std::min(n_star, pool_size), plan.master_seed);
    }
    for (std::size_t i : chosen) result.selected.push_back(plan.instance_pool[i].id);

    // Journal: resume what is there unless told to start over.
    std::vector<std::optional<JournalEntry>> entries(chosen.size());
    std::optional<JournalWriter> writer;
    if (plan.journal) {
        const bool exists = std::filesystem::exists(*plan.journal);
        if (exists && !plan.fresh) {
            JournalContents prior = read_journal(*plan.journal);
            if (prior.fingerprint != plan.fingerprint) {
                throw ConfigError("journal " + plan.journal->string() +
                                  " belongs to a different configuration; rerun with --fresh");
            }
            if (prior.selected != result.selected) {
                throw ConfigError("journal " + plan.journal->string() +
                                  " lists a different instance selection");
            }
            for (std::size_t k = 0; k < chosen.size(); ++k) {
                auto it = prior.completed.find(result.selected[k]);
                if (it != prior.completed.end()) {
                    entries[k] = it->second;
                    ++result.resumed;
                }
            }
            writer.emplace(JournalWriter::append(*plan.journal));
        } else {
            if (plan.journal->has_parent_path()) {
                std::filesystem::create_directories(plan.journal->parent_path());
            }
            writer.emplace(JournalWriter::create(*plan.journal, plan.fingerprint, result.selected));
        }
    }

    std::vector<std::size_t> todo;
    for (std::size_t k = 0; k < chosen.size(); ++k) {
        if (!entries[k]) todo.push_back(k);
    }
    result.sampled = todo.size();

    int workers = plan.workers;
    if (!plan.runner1->concurrent_safe() || !plan.runner2->concurrent_safe()) workers = 1;
    workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers),
                                                     std::max<std::size_t>(todo.size(), 1)));

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::size_t error_pos = todo.size();
    auto work = [&] {
        while (!failed.load()) {
            const std::size_t t = next.fetch_add(1);
            if (t >= todo.size()) return;
            const std::size_t k = todo[t];
            const std::size_t pool_index = chosen[k];
            try {
                SamplingOutcome o = calc_nreps(*plan.runner1, *plan.runner2,
                                               plan.instance_pool[pool_index], plan.sampling,
                                               instance_seed(plan.master_seed, pool_index));
                JournalEntry e{o.diff, o.iterations, o.switched_to_bootstrap};
                if (writer) writer->write(e);
                entries[k] = std::move(e);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                // Report the earliest failing instance for a stable message.
                if (t < error_pos) {
                    error_pos = t;
                    error = std::current_exception();
                }
                failed.store(true);
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);

    std::vector<double> phis;
    std::vector<PairedDifference> per_instance;
    std::size_t exhausted = 0;
    for (const auto& e : entries) {
        phis.push_back(e->diff.phi_hat);
        per_instance.push_back(e->diff);
        if (e->diff.budget_exhausted) ++exhausted;
        if (e->switched_to_bootstrap) {
            warnings.push_back("instance '" + e->diff.instance_id +
                               "': parametric SE undefined (equal means), switched to bootstrap");
        }
    }
    if (exhausted > 0) {
        warnings.push_back(std::to_string(exhausted) + " instance(s) reached n_max = " +
                           std::to_string(plan.sampling.n_max) + " before se_max = " +
                           detail::fmt6(plan.sampling.se_max));
    }

    result.report = run_test(plan.design.test_family, phis, plan.design.mu0, plan.design.alpha,
                             plan.design.alternative);
    result.report.per_instance = std::move(per_instance);
    warnings.insert(warnings.end(), result.report.warnings.begin(), result.report.warnings.end());
    result.report.warnings = std::move(warnings);

    BootstrapConfig boot{plan.diagnostics_resamples,
                         derive_seed(plan.master_seed, kBootstrapDomain)};
    result.diagnostics = make_diagnostics(phis, boot);
    return result;
}

}  // namespace algocmp
