// algocmp: design and run comparisons of two stochastic algorithms.
//
//   algocmp design  --power P (--d D | --delta X --sigma-bound S) [--alpha A]
//                   [--alternative two-sided|one-sided|less|greater] [--test t|wilcoxon|sign]
//   algocmp power   --n N (--d D | --d-range LO:HI [--points K] [--highlights a,b,..] [--out F])
//                   [--alpha A] [--alternative ...] [--test ...]
//   algocmp reps    --config C --instance ID [--trace F]
//   algocmp run     --config C [--fresh] [--workers W] [--seed S]
//   algocmp resume  --config C [--workers W] [--seed S]
//
// Exit status: 0 done, 2 usage or configuration error, 3 runner failure,
// 4 assumption violation. A significant or insignificant test result does
// not change the status.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "algocmp/algocmp.hpp"

namespace {

using namespace algocmp;

constexpr int kExitUsage = 2;
constexpr int kExitRunner = 3;
constexpr int kExitAssumption = 4;

struct DesignFlags {
    double alpha = 0.05;
    std::string alternative = "two_sided";
    std::string test = "t";
};

void add_design_flags(CLI::App* cmd, DesignFlags& f) {
    cmd->add_option("--alpha", f.alpha, "significance level")->capture_default_str();
    cmd->add_option("--alternative", f.alternative, "two-sided, one-sided (= less), less, greater")
        ->capture_default_str();
    cmd->add_option("--test", f.test, "t, wilcoxon or sign")->capture_default_str();
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    for (std::string item; std::getline(in, item, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw DomainError("cannot parse '" + item + "' as a number");
        }
    }
    return out;
}

std::pair<double, double> parse_range(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw DomainError("--d-range must look like LO:HI");
    const auto lo = parse_list(s.substr(0, colon));
    const auto hi = parse_list(s.substr(colon + 1));
    if (lo.size() != 1 || hi.size() != 1) throw DomainError("--d-range must look like LO:HI");
    return {lo[0], hi[0]};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("write failed: " + path.string());
}

int cmd_design(double power, std::optional<double> d, std::optional<double> delta,
               std::optional<double> sigma_bound, const DesignFlags& f) {
    ComparisonDesign design;
    design.alpha = f.alpha;
    design.power_target = power;
    design.alternative = parse_alternative(f.alternative);
    design.test_family = parse_test_family(f.test);
    if (d && delta) throw DomainError("give either --d or --delta, not both");
    if (d) {
        design.mres_d = *d;
    } else if (delta) {
        if (!sigma_bound) {
            throw DomainError("--delta needs --sigma-bound, an upper bound on the total SD");
        }
        design.mres_d = mres_from_delta(*delta, *sigma_bound);
    } else {
        throw DomainError("give --d or --delta with --sigma-bound");
    }
    const SampleSizeResult r = calc_instances(design);
    std::cout << "N* = " << r.n_instances << "\n";
    std::cout << "test: " << to_string(r.test_family) << "\n";
    if (r.test_family != TestFamily::t_test) {
        std::cout << "t-test basis: " << r.n_instances_t << "\n";
    }
    std::cout << "achieved power (t basis): " << format_sig(r.achieved_power) << "\n";
    std::cout << "ncp: " << format_sig(r.ncp_at_n) << "\n";
    const nlohmann::json rec = {{"n_instances", r.n_instances},
                                {"n_instances_t", r.n_instances_t},
                                {"achieved_power", r.achieved_power},
                                {"ncp", r.ncp_at_n},
                                {"test", std::string(to_string(r.test_family))},
                                {"d", design.mres_d},
                                {"alpha", design.alpha},
                                {"power_target", design.power_target},
                                {"alternative", std::string(to_string(design.alternative))}};
    std::cout << rec.dump() << "\n";
    return 0;
}

/// Nonparametric tests are assessed on the t-test basis with N * ARE
/// instances, the inverse of the sample-size adjustment.
std::int64_t effective_n(std::int64_t n, TestFamily t) {
    double are = 1.0;
    if (t == TestFamily::wilcoxon) are = kWilcoxonAre;
    if (t == TestFamily::sign) are = kSignAre;
    return static_cast<std::int64_t>(std::floor(static_cast<double>(n) * are + 1e-9));
}

int cmd_power(std::int64_t n, std::optional<double> d, const std::string& d_range, int points,
              const std::string& highlights, const std::string& out_path, const DesignFlags& f) {
    const Alternative alt = parse_alternative(f.alternative);
    const TestFamily family = parse_test_family(f.test);
    const std::int64_t n_eff = effective_n(n, family);
    if (d && !d_range.empty()) throw DomainError("give either --d or --d-range, not both");
    if (d) {
        if (!(*d > 0.0)) throw DomainError("effect size d must be positive");
        const double p = calc_power(n_eff, *d, f.alpha, alt);
        std::cout << "power = " << format_sig(p, 7) << "\n";
        std::cout << nlohmann::json{{"n", n}, {"d", *d}, {"power", p}}.dump() << "\n";
        return 0;
    }
    if (d_range.empty()) throw DomainError("give --d or --d-range");
    const auto [lo, hi] = parse_range(d_range);
    const auto curve = power_curve(n_eff, f.alpha, alt, lo, hi, points);
    std::ostringstream table;
    write_power_curve(table, curve);
    if (out_path.empty()) {
        std::cout << table.str();
    } else {
        write_file(out_path, table.str());
        std::cout << "curve written to " << out_path << "\n";
    }
    if (!highlights.empty()) {
        for (const PowerHighlight& h : curve_highlights(curve, parse_list(highlights))) {
            if (h.d) {
                std::cout << "power >= " << format_sig(h.power_level) << " at d = "
                          << format_sig(*h.d) << "\n";
            } else {
                std::cout << "power >= " << format_sig(h.power_level)
                          << " not reached on this range\n";
            }
        }
    }
    return 0;
}

int cmd_reps(const std::string& config_path, const std::string& instance_id,
             const std::string& trace_path) {
    const ExperimentConfig cfg = load_config(config_path);
    const InstanceRef& inst = cfg.instance(instance_id);
    std::size_t pool_index = 0;
    while (cfg.instances[pool_index].id != instance_id) ++pool_index;
    const SpecRunner r1(cfg.algorithm1);
    const SpecRunner r2(cfg.algorithm2);
    const SamplingOutcome o =
        calc_nreps(r1, r2, inst, cfg.sampling, instance_seed(cfg.master_seed, pool_index));
    std::cout << "algorithms: " << r1.alias() << ", " << r2.alias() << "\n";
    std::cout << format_outcome(o);
    if (!trace_path.empty()) {
        std::ostringstream t;
        write_se_trace(t, o);
        write_file(trace_path, t.str());
    }
    return 0;
}

int cmd_run(const std::string& config_path, bool fresh, bool require_journal,
            std::optional<int> workers, std::optional<std::uint64_t> seed) {
    ConfigOverrides overrides;
    overrides.master_seed = seed;
    overrides.workers = workers;
    const ExperimentConfig cfg = load_config(config_path, overrides);
    if (require_journal && !std::filesystem::exists(cfg.journal_path())) {
        throw ConfigError("nothing to resume: " + cfg.journal_path().string() + " does not exist");
    }
    std::filesystem::create_directories(cfg.output_dir);
    ExperimentPlan plan = cfg.plan();
    plan.journal = cfg.journal_path();
    plan.fresh = fresh;
    const ExperimentResult res = run_experiment(plan);

    std::ostringstream table, diag;
    write_results_table(table, res.report.per_instance);
    write_diagnostics(diag, res.diagnostics);
    const std::string summary =
        format_summary(res, cfg.design, cfg.algorithm1.alias, cfg.algorithm2.alias);
    write_file(cfg.output_dir / "results.tsv", table.str());
    write_file(cfg.output_dir / "diagnostics.tsv", diag.str());
    write_file(cfg.output_dir / "summary.txt", summary);
    std::cout << summary;
    std::cout << "outputs in " << cfg.output_dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Design and run statistically sound comparisons of two stochastic algorithms"};
    app.require_subcommand(1);

    DesignFlags design_flags;
    double power = 0.8;
    std::optional<double> d, delta, sigma_bound;
    auto* design = app.add_subcommand("design", "required number of instances");
    design->add_option("--power", power, "target power")->required();
    design->add_option("--d", d, "minimally relevant standardized effect size");
    design->add_option("--delta", delta, "minimally relevant effect in raw units");
    design->add_option("--sigma-bound", sigma_bound, "upper bound on the total SD (with --delta)");
    add_design_flags(design, design_flags);

    DesignFlags power_flags;
    std::int64_t n = 0;
    std::optional<double> power_d;
    std::string d_range, highlights, curve_out;
    int points = 100;
    auto* pow = app.add_subcommand("power", "power at fixed N, or a power curve");
    pow->add_option("--n", n, "number of instances")->required();
    pow->add_option("--d", power_d, "effect size");
    pow->add_option("--d-range", d_range, "effect size range LO:HI for a curve");
    pow->add_option("--points", points, "curve points")->capture_default_str();
    pow->add_option("--highlights", highlights, "comma-separated power levels to locate");
    pow->add_option("--out", curve_out, "write the curve here instead of stdout");
    add_design_flags(pow, power_flags);

    std::string reps_config, reps_instance, reps_trace;
    auto* reps = app.add_subcommand("reps", "adaptive sampling on one instance");
    reps->add_option("--config", reps_config, "experiment config")->required();
    reps->add_option("--instance", reps_instance, "instance id")->required();
    reps->add_option("--trace", reps_trace, "write the SE trace here");

    std::string run_config;
    bool fresh = false;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "full experiment (resumes a matching journal)");
    run->add_option("--config", run_config, "experiment config")->required();
    run->add_flag("--fresh", fresh, "discard any existing journal");
    run->add_option("--workers", workers, "parallel instances");
    run->add_option("--seed", seed, "master seed");

    std::string resume_config;
    auto* resume = app.add_subcommand("resume", "continue an interrupted experiment");
    resume->add_option("--config", resume_config, "experiment config")->required();
    resume->add_option("--workers", workers, "parallel instances");
    resume->add_option("--seed", seed, "master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*design) return cmd_design(power, d, delta, sigma_bound, design_flags);
        if (*pow) return cmd_power(n, power_d, d_range, points, highlights, curve_out, power_flags);
        if (*reps) return cmd_reps(reps_config, reps_instance, reps_trace);
        if (*run) return cmd_run(run_config, fresh, false, workers, seed);
        if (*resume) return cmd_run(resume_config, false, true, workers, seed);
    } catch (const RunnerError& e) {
        std::cerr << "runner failure: " << e.what() << "\n";
        if (!e.output_excerpt().empty()) std::cerr << "output:\n" << e.output_excerpt() << "\n";
        return kExitRunner;
    } catch (const AssumptionViolation& e) {
        std::cerr << "assumption violated: " << e.what() << "\n";
        return kExitAssumption;
    } catch (const DegenerateError& e) {
        std::cerr << "degenerate data: " << e.what() << "\n";
        return kExitAssumption;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
