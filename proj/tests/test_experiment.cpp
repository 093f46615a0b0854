#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "algocmp/experiment.hpp"
#include "algocmp/journal.hpp"

using namespace algocmp;

namespace {

ComparisonDesign design(double power = 0.85, double d = 0.5, TestFamily t = TestFamily::t_test) {
    ComparisonDesign c;
    c.power_target = power;
    c.mres_d = d;
    c.alpha = 0.05;
    c.alternative = Alternative::two_sided;
    c.test_family = t;
    return c;
}

SamplingConfig sampling(double se_max = 0.2, int n0 = 5, int n_max = 200) {
    SamplingConfig s;
    s.se_max = se_max;
    s.n0 = n0;
    s.n_max = n_max;
    return s;
}

ExperimentPlan synthetic_plan(std::size_t pool_size, double delta, double sigma_phi, double noise,
                              std::uint64_t seed) {
    const SyntheticPool pool = build_synthetic_pool(pool_size, delta, sigma_phi, noise, seed);
    ExperimentPlan p;
    p.design = design();
    p.sampling = sampling();
    p.instance_pool = pool.instances;
    p.runner1 = std::make_shared<SpecRunner>(pool.algorithm1);
    p.runner2 = std::make_shared<SpecRunner>(pool.algorithm2);
    p.master_seed = seed;
    p.fingerprint = "test";
    return p;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "algocmp-tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Synthetic runner that counts calls per instance and can fail on demand.
struct CountingRunner final : AlgorithmRunner {
    CountingRunner(std::string a, bool add_latent) : alias_(std::move(a)), add_latent_(add_latent) {}

    RunResult run(const InstanceRef& inst, std::uint64_t seed) const override {
        {
            std::lock_guard lock(m_);
            ++calls_[inst.id];
            if (inst.id == fail_on_) throw RunnerError("interrupted");
        }
        PhiloxStream rng(seed);
        const double phi = add_latent_ ? std::get<SyntheticPayload>(inst.payload).phi : 0.0;
        return {phi + rng.normal(), 0.0, seed};
    }
    const std::string& alias() const noexcept override { return alias_; }

    std::string alias_;
    bool add_latent_;
    mutable std::mutex m_;
    mutable std::map<std::string, int> calls_;
    std::string fail_on_;
};

}  // namespace

TEST(RunExperiment, UsesDesignedNumberOfInstances) {
    const auto res = run_experiment(synthetic_plan(50, 0.5, 1.0, 1.0, 1));
    EXPECT_EQ(res.sample_size.n_instances, 38);
    EXPECT_EQ(res.selected.size(), 38u);
    EXPECT_EQ(std::set<std::string>(res.selected.begin(), res.selected.end()).size(), 38u);
    EXPECT_EQ(res.report.n_instances_used, 38);
    EXPECT_EQ(res.report.per_instance.size(), 38u);
    ASSERT_TRUE(res.report.df.has_value());
    EXPECT_EQ(*res.report.df, 37.0);
    EXPECT_EQ(res.diagnostics.qq_points.size(), 38u);
    EXPECT_EQ(res.diagnostics.boot_sdm.size(), 999u);
}

TEST(RunExperiment, SmallPoolWarnsWithAchievablePower) {
    const auto plan = synthetic_plan(20, 0.5, 1.0, 1.0, 2);
    const auto res = run_experiment(plan);
    EXPECT_EQ(res.selected.size(), 20u);
    const std::string expected =
        "power at N = 20 is " + detail::fmt6(calc_power(20, 0.5, plan.design));
    bool found = false;
    for (const auto& w : res.report.warnings) found |= w.find(expected) != std::string::npos;
    EXPECT_TRUE(found);
}

TEST(RunExperiment, WilcoxonConsumesLargerSample) {
    auto plan = synthetic_plan(60, 0.5, 1.0, 1.0, 3);
    plan.design.test_family = TestFamily::wilcoxon;
    const auto res = run_experiment(plan);
    EXPECT_EQ(res.selected.size(), 45u);
    EXPECT_EQ(res.report.test_family, TestFamily::wilcoxon);
}

TEST(RunExperiment, UseAllInstances) {
    auto plan = synthetic_plan(55, 0.5, 1.0, 1.0, 4);
    plan.use_all_instances = true;
    EXPECT_EQ(run_experiment(plan).selected.size(), 55u);
}

TEST(RunExperiment, DfDependsOnlyOnInstanceCount) {
    for (double se : {0.05, 0.2, 0.8}) {
        auto plan = synthetic_plan(50, 0.5, 1.0, 2.0, 5);
        plan.sampling = sampling(se, 3, 2000);
        const auto res = run_experiment(plan);
        EXPECT_EQ(*res.report.df, 37.0) << se;
    }
}

TEST(RunExperiment, WorkerCountDoesNotChangeResults) {
    auto plan = synthetic_plan(50, 0.3, 1.0, 1.0, 6);
    const auto serial = run_experiment(plan);
    plan.workers = 4;
    const auto parallel = run_experiment(plan);
    ASSERT_EQ(serial.report.per_instance.size(), parallel.report.per_instance.size());
    for (std::size_t k = 0; k < serial.report.per_instance.size(); ++k) {
        EXPECT_EQ(serial.report.per_instance[k].instance_id, parallel.report.per_instance[k].instance_id);
        EXPECT_EQ(serial.report.per_instance[k].phi_hat, parallel.report.per_instance[k].phi_hat);
    }
    EXPECT_EQ(serial.report.p_value, parallel.report.p_value);
}

TEST(RunExperiment, NonConcurrentRunnerIsNeverCalledConcurrently) {
    std::atomic<int> in_flight{0};
    std::atomic<int> worst{0};
    auto fn = [&](const InstanceRef&, std::uint64_t seed) {
        const int now = ++in_flight;
        worst = std::max(worst.load(), now);
        PhiloxStream rng(seed);
        const double v = rng.normal();
        --in_flight;
        return v;
    };
    auto plan = synthetic_plan(50, 0.0, 1.0, 1.0, 7);
    plan.runner1 = std::make_shared<FunctionRunner>("serial-a", fn, false);
    plan.runner2 = std::make_shared<FunctionRunner>("serial-b", fn, false);
    plan.workers = 8;
    run_experiment(plan);
    EXPECT_EQ(worst.load(), 1);
}

TEST(RunExperiment, RejectsInvalidPlans) {
    auto plan = synthetic_plan(10, 0.5, 1.0, 1.0, 8);
    plan.runner2 = plan.runner1;
    EXPECT_THROW(run_experiment(plan), DomainError);
    plan = synthetic_plan(10, 0.5, 1.0, 1.0, 8);
    plan.instance_pool.push_back(plan.instance_pool.front());
    EXPECT_THROW(run_experiment(plan), DomainError);
    plan = synthetic_plan(10, 0.5, 1.0, 1.0, 8);
    plan.instance_pool.clear();
    EXPECT_THROW(run_experiment(plan), DomainError);
}

TEST(SelectInstances, WithoutReplacementAndDeterministic) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto a = select_instances(100, 38, seed);
        EXPECT_EQ(a, select_instances(100, 38, seed));
        EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 38u);
        for (auto i : a) EXPECT_LT(i, 100u);
        // A larger draw extends a smaller one.
        const auto b = select_instances(100, 45, seed);
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
    EXPECT_NE(select_instances(100, 38, 1), select_instances(100, 38, 2));
    EXPECT_THROW(select_instances(5, 6, 1), DomainError);
}

TEST(SelectInstances, Uniform) {
    std::vector<int> hits(20, 0);
    const int reps = 20000;
    for (int r = 0; r < reps; ++r) {
        for (auto i : select_instances(20, 5, static_cast<std::uint64_t>(r))) ++hits[i];
    }
    double chi2 = 0.0;
    const double expect = reps * 5.0 / 20.0;
    for (int h : hits) chi2 += (h - expect) * (h - expect) / expect;
    EXPECT_LT(chi2, 43.8);  // 0.999 quantile, 19 df
}

TEST(InstanceSeed, DependsOnMasterAndPosition) {
    EXPECT_EQ(instance_seed(9, 3), derive_seed(9, kInstanceDomain, 3));
    EXPECT_NE(instance_seed(9, 3), instance_seed(9, 4));
    EXPECT_NE(instance_seed(9, 3), instance_seed(10, 3));
}

TEST(Journal, ResumeSkipsCompletedInstances) {
    const auto dir = scratch("resume");
    const SyntheticPool pool = build_synthetic_pool(50, 0.5, 1.0, 1.0, 10);
    auto r1 = std::make_shared<CountingRunner>("a", false);
    auto r2 = std::make_shared<CountingRunner>("b", true);
    ExperimentPlan plan;
    plan.design = design();
    plan.sampling = sampling();
    plan.instance_pool = pool.instances;
    plan.runner1 = r1;
    plan.runner2 = r2;
    plan.master_seed = 10;
    plan.fingerprint = "fp";
    plan.journal = dir / "journal.ndjson";

    const auto selected = [&] {
        std::vector<std::string> ids;
        for (auto i : select_instances(50, 38, 10)) ids.push_back(pool.instances[i].id);
        return ids;
    }();
    r2->fail_on_ = selected[20];
    EXPECT_THROW(run_experiment(plan), RunnerError);
    const JournalContents partial = read_journal(*plan.journal);
    EXPECT_EQ(partial.completed.size(), 20u);
    EXPECT_EQ(partial.selected, selected);

    const auto before = r1->calls_;
    r2->fail_on_.clear();
    const auto resumed = run_experiment(plan);
    EXPECT_EQ(resumed.resumed, 20u);
    EXPECT_EQ(resumed.sampled, 18u);
    for (std::size_t k = 0; k < 20; ++k) {
        EXPECT_EQ(r1->calls_.at(selected[k]), before.at(selected[k])) << selected[k];
    }

    // Identical to an uninterrupted run.
    auto clean = plan;
    clean.journal.reset();
    clean.runner1 = std::make_shared<CountingRunner>("a", false);
    clean.runner2 = std::make_shared<CountingRunner>("b", true);
    const auto reference = run_experiment(clean);
    ASSERT_EQ(reference.report.per_instance.size(), resumed.report.per_instance.size());
    for (std::size_t k = 0; k < 38; ++k) {
        EXPECT_EQ(reference.report.per_instance[k].phi_hat, resumed.report.per_instance[k].phi_hat);
        EXPECT_EQ(reference.report.per_instance[k].se_hat, resumed.report.per_instance[k].se_hat);
        EXPECT_EQ(reference.report.per_instance[k].n1, resumed.report.per_instance[k].n1);
    }
    EXPECT_EQ(reference.report.p_value, resumed.report.p_value);

    // A third invocation has nothing left to do.
    const auto again = run_experiment(plan);
    EXPECT_EQ(again.resumed, 38u);
    EXPECT_EQ(again.sampled, 0u);
}

TEST(Journal, TornFinalLineIsIgnored) {
    const auto dir = scratch("torn");
    auto plan = synthetic_plan(50, 0.5, 1.0, 1.0, 11);
    plan.journal = dir / "journal.ndjson";
    const auto full = run_experiment(plan);
    // Drop the last record and leave half of it behind, as a crash mid-write would.
    std::vector<std::string> lines;
    {
        std::ifstream in(*plan.journal);
        for (std::string l; std::getline(in, l);) lines.push_back(l);
    }
    ASSERT_EQ(lines.size(), 39u);
    {
        std::ofstream out(*plan.journal, std::ios::trunc);
        for (std::size_t i = 0; i + 1 < lines.size(); ++i) out << lines[i] << '\n';
        out << lines.back().substr(0, lines.back().size() / 2);
    }
    EXPECT_EQ(read_journal(*plan.journal).completed.size(), 37u);
    const auto resumed = run_experiment(plan);
    EXPECT_EQ(resumed.resumed, 37u);
    EXPECT_EQ(resumed.sampled, 1u);
    EXPECT_EQ(resumed.report.p_value, full.report.p_value);
    EXPECT_EQ(read_journal(*plan.journal).completed.size(), 38u);
}

TEST(Journal, CorruptMiddleLineIsAnError) {
    const auto dir = scratch("corrupt");
    auto plan = synthetic_plan(50, 0.5, 1.0, 1.0, 12);
    plan.journal = dir / "journal.ndjson";
    run_experiment(plan);
    std::vector<std::string> lines;
    {
        std::ifstream in(*plan.journal);
        for (std::string l; std::getline(in, l);) lines.push_back(l);
    }
    lines[5] = "{not json";
    {
        std::ofstream out(*plan.journal, std::ios::trunc);
        for (const auto& l : lines) out << l << '\n';
    }
    EXPECT_THROW(read_journal(*plan.journal), ConfigError);
}

TEST(Journal, FingerprintMismatchAndFresh) {
    const auto dir = scratch("fingerprint");
    auto plan = synthetic_plan(50, 0.5, 1.0, 1.0, 13);
    plan.journal = dir / "journal.ndjson";
    run_experiment(plan);
    plan.fingerprint = "other";
    EXPECT_THROW(run_experiment(plan), ConfigError);
    plan.fresh = true;
    const auto res = run_experiment(plan);
    EXPECT_EQ(res.resumed, 0u);
    EXPECT_EQ(read_journal(*plan.journal).fingerprint, "other");
}

TEST(Journal, RowRoundTrip) {
    JournalEntry e;
    e.diff = {"inst \"7\"", 0.1 + 0.2, 1.0 / 3.0, 17, 23, DiffKind::percent, SeMethod::bootstrap, true};
    e.iterations = 9;
    e.switched_to_bootstrap = true;
    const JournalEntry back = detail::journal_entry(nlohmann::json::parse(detail::journal_row(e).dump()));
    EXPECT_EQ(back.diff.instance_id, e.diff.instance_id);
    EXPECT_EQ(back.diff.phi_hat, e.diff.phi_hat);
    EXPECT_EQ(back.diff.se_hat, e.diff.se_hat);
    EXPECT_EQ(back.diff.n1, 17);
    EXPECT_EQ(back.diff.n2, 23);
    EXPECT_EQ(back.diff.diff_kind, DiffKind::percent);
    EXPECT_EQ(back.diff.se_method, SeMethod::bootstrap);
    EXPECT_TRUE(back.diff.budget_exhausted);
    EXPECT_EQ(back.iterations, 9);
    EXPECT_TRUE(back.switched_to_bootstrap);
}

TEST(Calibration, TypeOneErrorOfWholeExperiment) {
    // Identical Normal(0, 1) algorithms on every instance.
    int rejected = 0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
        auto plan = synthetic_plan(50, 0.0, 0.0, 1.0, 5000 + static_cast<std::uint64_t>(r));
        plan.diagnostics_resamples = 100;
        if (run_experiment(plan).report.significant()) ++rejected;
    }
    EXPECT_NEAR(static_cast<double>(rejected) / reps, 0.05, 0.03);
}
