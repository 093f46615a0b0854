#pragma once

// "Run algorithm a_i once on instance j and observe a performance value."
//
// Values are recorded raw; whether smaller or larger is better is decided
// only by the hypothesis direction chosen at analysis time.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "algocmp/design.hpp"
#include "algocmp/errors.hpp"
#include "algocmp/random.hpp"
#include "algocmp/subprocess.hpp"
#include "algocmp/tsp_demo.hpp"

namespace algocmp {

enum class RunnerKind { subprocess, synthetic_normal, synthetic_lognormal, demo_sann_tsp };

inline std::string_view to_string(RunnerKind k) noexcept {
    switch (k) {
        case RunnerKind::subprocess: return "subprocess";
        case RunnerKind::synthetic_normal: return "synthetic_normal";
        case RunnerKind::synthetic_lognormal: return "synthetic_lognormal";
        case RunnerKind::demo_sann_tsp: return "demo_sann_tsp";
    }
    return "?";
}

inline RunnerKind parse_runner_kind(std::string_view s) {
    if (s == "subprocess") return RunnerKind::subprocess;
    if (s == "synthetic_normal") return RunnerKind::synthetic_normal;
    if (s == "synthetic_lognormal") return RunnerKind::synthetic_lognormal;
    if (s == "demo_sann_tsp") return RunnerKind::demo_sann_tsp;
    throw DomainError("unknown algorithm kind '" + std::string(s) + "'");
}

inline constexpr double kDefaultTimeoutSeconds = 3600.0;

struct SubprocessParams {
    std::string executable;
    std::vector<std::string> args;  ///< {instance} and {seed} are substituted
    double timeout_s = kDefaultTimeoutSeconds;
};

/// How an instance's latent difference phi_j shifts this algorithm's mean.
enum class LatentEffect { none, additive, multiplicative };

/// Observation = m + sigma * Z (normal) or m * exp(sigma Z - sigma^2 / 2)
/// (lognormal, mean m), where m = mu + baseline_j, then shifted by phi_j
/// (additive) or scaled by 1 + phi_j (multiplicative).
struct SyntheticParams {
    double mu = 0.0;
    double sigma = 1.0;
    LatentEffect latent = LatentEffect::none;
};

struct AlgorithmSpec {
    std::string alias;
    RunnerKind kind = RunnerKind::synthetic_normal;
    std::variant<SubprocessParams, SyntheticParams, AnnealingParams> params = SyntheticParams{};
    bool concurrent_safe = true;
};

struct FilePayload {
    std::string path;
};

struct SyntheticPayload {
    double baseline = 0.0;
    double phi = 0.0;
};

struct TspPayload {
    std::shared_ptr<const DistanceMatrix> distances;
};

struct InstanceRef {
    std::string id;
    std::variant<FilePayload, SyntheticPayload, TspPayload> payload = SyntheticPayload{};
};

struct RunResult {
    double value = 0.0;
    double wall_time = 0.0;
    std::uint64_t seed_used = 0;
};

namespace detail {

inline std::string substitute(std::string arg, std::string_view key, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = arg.find(key, pos)) != std::string::npos) {
        arg.replace(pos, key.size(), value);
        pos += value.size();
    }
    return arg;
}

inline RunResult run_subprocess(const SubprocessParams& p, const InstanceRef& instance,
                                std::uint64_t seed) {
    const std::string instance_arg =
        std::holds_alternative<FilePayload>(instance.payload)
            ? std::get<FilePayload>(instance.payload).path
            : instance.id;
    const std::string seed_arg = std::to_string(seed);
    std::vector<std::string> argv{p.executable};
    for (const std::string& a : p.args) {
        argv.push_back(substitute(substitute(a, "{instance}", instance_arg), "{seed}", seed_arg));
    }
    const ProcessResult r = run_process(argv, p.timeout_s);
    if (r.timed_out) {
        throw RunnerError("'" + p.executable + "' timed out after " + std::to_string(p.timeout_s) + " s",
                          output_excerpt(r));
    }
    if (r.term_signal != 0) {
        throw RunnerError("'" + p.executable + "' killed by signal " + std::to_string(r.term_signal),
                          output_excerpt(r));
    }
    if (r.exit_code != 0) {
        throw RunnerError("'" + p.executable + "' exited with status " + std::to_string(r.exit_code),
                          output_excerpt(r));
    }
    const auto value = parse_last_line_value(r.stdout_text);
    if (!value) {
        throw RunnerError("'" + p.executable + "' did not end its output with a decimal value",
                          output_excerpt(r));
    }
    return {*value, r.wall_time, seed};
}

inline double synthetic_draw(RunnerKind kind, const SyntheticParams& p,
                             const SyntheticPayload& inst, std::uint64_t seed) {
    double m = p.mu + inst.baseline;
    if (p.latent == LatentEffect::additive) m += inst.phi;
    if (p.latent == LatentEffect::multiplicative) m *= 1.0 + inst.phi;
    if (p.sigma == 0.0) return m;
    PhiloxStream rng(seed);
    const double z = rng.normal();
    if (kind == RunnerKind::synthetic_lognormal) {
        return m * std::exp(p.sigma * z - 0.5 * p.sigma * p.sigma);
    }
    return m + p.sigma * z;
}

}  // namespace detail

/// One run of an algorithm on an instance, deterministic given the seed
/// (for subprocess runners, as deterministic as the solver itself).
inline RunResult run_once(const AlgorithmSpec& spec, const InstanceRef& instance,
                          std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    switch (spec.kind) {
        case RunnerKind::subprocess: {
            const auto* p = std::get_if<SubprocessParams>(&spec.params);
            if (!p) throw DomainError("subprocess algorithm '" + spec.alias + "' lacks a command");
            return detail::run_subprocess(*p, instance, seed);
        }
        case RunnerKind::synthetic_normal:
        case RunnerKind::synthetic_lognormal: {
            const auto* p = std::get_if<SyntheticParams>(&spec.params);
            const auto* inst = std::get_if<SyntheticPayload>(&instance.payload);
            if (!p || !inst) {
                throw DomainError("synthetic algorithm '" + spec.alias +
                                  "' needs a synthetic instance, got '" + instance.id + "'");
            }
            const double v = detail::synthetic_draw(spec.kind, *p, *inst, seed);
            return {v, elapsed(), seed};
        }
        case RunnerKind::demo_sann_tsp: {
            const auto* p = std::get_if<AnnealingParams>(&spec.params);
            const auto* inst = std::get_if<TspPayload>(&instance.payload);
            if (!p || !inst || !inst->distances) {
                throw DomainError("annealing demo '" + spec.alias +
                                  "' needs a TSP instance, got '" + instance.id + "'");
            }
            const double v = anneal_tsp(*inst->distances, *p, seed);
            return {v, elapsed(), seed};
        }
    }
    throw DomainError("unsupported algorithm kind");
}

/// What the adaptive sampler needs from an algorithm.
class AlgorithmRunner {
public:
    virtual ~AlgorithmRunner() = default;
    virtual RunResult run(const InstanceRef& instance, std::uint64_t seed) const = 0;
    virtual const std::string& alias() const noexcept = 0;
    /// Whether run() may be invoked from several threads at once.
    virtual bool concurrent_safe() const noexcept { return true; }
};

class SpecRunner final : public AlgorithmRunner {
public:
    explicit SpecRunner(AlgorithmSpec spec) : spec_(std::move(spec)) {}

    RunResult run(const InstanceRef& instance, std::uint64_t seed) const override {
        return run_once(spec_, instance, seed);
    }
    const std::string& alias() const noexcept override { return spec_.alias; }
    bool concurrent_safe() const noexcept override { return spec_.concurrent_safe; }
    const AlgorithmSpec& spec() const noexcept { return spec_; }

private:
    AlgorithmSpec spec_;
};

/// Wraps a callable (instance, seed) -> value; handy for tests and embedding.
class FunctionRunner final : public AlgorithmRunner {
public:
    using Fn = std::function<double(const InstanceRef&, std::uint64_t)>;

    FunctionRunner(std::string alias, Fn fn, bool concurrent_safe = true)
        : alias_(std::move(alias)), fn_(std::move(fn)), concurrent_safe_(concurrent_safe) {}

    RunResult run(const InstanceRef& instance, std::uint64_t seed) const override {
        return {fn_(instance, seed), 0.0, seed};
    }
    const std::string& alias() const noexcept override { return alias_; }
    bool concurrent_safe() const noexcept override { return concurrent_safe_; }

private:
    std::string alias_;
    Fn fn_;
    bool concurrent_safe_;
};

struct SyntheticPool {
    std::vector<InstanceRef> instances;
    AlgorithmSpec algorithm1;
    AlgorithmSpec algorithm2;
};

/// Instances with latent differences phi_j ~ Normal(delta, sigma_phi) and two
/// normal runners with per-run noise SD noise_sd. Under DiffKind::simple
/// algorithm 2's mean exceeds algorithm 1's by phi_j; under percent it is
/// baseline * (1 + phi_j), so baseline must be positive.
inline SyntheticPool build_synthetic_pool(std::size_t n_instances, double delta, double sigma_phi,
                                          double noise_sd, std::uint64_t seed,
                                          DiffKind kind = DiffKind::simple,
                                          double baseline = 0.0) {
    if (n_instances < 1) throw DomainError("synthetic pool needs at least one instance");
    if (sigma_phi < 0.0 || noise_sd < 0.0) throw DomainError("standard deviations must be >= 0");
    if (kind == DiffKind::percent && !(baseline > 0.0)) {
        throw DomainError("percent synthetic pool needs a positive baseline");
    }
    SyntheticPool pool;
    pool.instances.reserve(n_instances);
    PhiloxStream rng(seed);
    const std::size_t width = std::to_string(n_instances).size();
    for (std::size_t j = 0; j < n_instances; ++j) {
        std::string number = std::to_string(j + 1);
        number.insert(0, width - number.size(), '0');
        const double phi = delta + sigma_phi * rng.normal();
        pool.instances.push_back({"syn-" + number, SyntheticPayload{baseline, phi}});
    }
    const LatentEffect effect =
        kind == DiffKind::simple ? LatentEffect::additive : LatentEffect::multiplicative;
    pool.algorithm1 = {"synthetic-a1", RunnerKind::synthetic_normal,
                       SyntheticParams{0.0, noise_sd, LatentEffect::none}, true};
    pool.algorithm2 = {"synthetic-a2", RunnerKind::synthetic_normal,
                       SyntheticParams{0.0, noise_sd, effect}, true};
    return pool;
}

}  // namespace algocmp
