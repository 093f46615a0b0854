#pragma once

// Experiment configuration (JSON) and instance manifests.
//
// Every object is checked against its list of known keys; anything else is
// rejected. Relative paths in a config resolve against the config file's
// directory, those in a manifest against the manifest's.
//
// Config:
//   {
//     "design":   {"alpha", "power", "d" | ("delta", "sigma_bound"),
//                  "alternative", "test", "mu0"},
//     "sampling": {"se_max", "n0", "n_max", "diff_kind", "se_method",
//                  "bootstrap_resamples", "bootstrap_seed", "force_balance", "batch"},
//     "algorithms": [algorithm, algorithm],       (optional with synthetic_pool)
//     "instances": "manifest.json" | [instance, ...],
//     "synthetic_pool": {"n", "delta", "sigma_phi", "noise_sd", "seed",
//                        "diff_kind", "baseline"},
//     "master_seed", "workers", "output_dir", "use_all_instances",
//     "sigma_estimate", "diagnostics_resamples"
//   }
//   algorithm: {"alias", "kind", "concurrent_safe", plus per kind
//     subprocess:    "command": [exe, arg...], "timeout_s"
//     synthetic_*:   "mu", "sigma", "latent": none|additive|multiplicative
//     demo_sann_tsp: "temperature", "budget", "steps_per_temperature"}
//
// Manifest: {"instances": [instance, ...]}
//   instance: {"id", one of
//     "path": file                                   (subprocess solvers)
//     "baseline", "phi"                              (synthetic runners)
//     "tsp": {"cities", "seed", "side"} | {"matrix": [[...], ...]}}
//
// Environment: ALGOCMP_WORKERS overrides "workers", ALGOCMP_SEED overrides
// "master_seed".

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "algocmp/algorithm_interface.hpp"
#include "algocmp/design.hpp"
#include "algocmp/errors.hpp"
#include "algocmp/experiment.hpp"
#include "algocmp/tsp_demo.hpp"

namespace algocmp {

using nlohmann::json;

struct ExperimentConfig {
    ComparisonDesign design;
    SamplingConfig sampling;
    AlgorithmSpec algorithm1;
    AlgorithmSpec algorithm2;
    std::vector<InstanceRef> instances;
    std::uint64_t master_seed = 0;
    int workers = 1;
    std::filesystem::path output_dir = "algocmp-out";
    bool use_all_instances = false;
    std::optional<double> sigma_estimate;
    int diagnostics_resamples = 999;
    /// Hex digest of the settings that determine results.
    std::string fingerprint;

    std::filesystem::path journal_path() const { return output_dir / "journal.ndjson"; }

    ExperimentPlan plan() const {
        ExperimentPlan p;
        p.design = design;
        p.sampling = sampling;
        p.instance_pool = instances;
        p.runner1 = std::make_shared<SpecRunner>(algorithm1);
        p.runner2 = std::make_shared<SpecRunner>(algorithm2);
        p.master_seed = master_seed;
        p.use_all_instances = use_all_instances;
        p.workers = workers;
        p.fingerprint = fingerprint;
        p.sigma_estimate = sigma_estimate;
        p.diagnostics_resamples = diagnostics_resamples;
        return p;
    }

    const InstanceRef& instance(const std::string& id) const {
        for (const InstanceRef& i : instances) {
            if (i.id == id) return i;
        }
        throw ConfigError("unknown instance id '" + id + "'");
    }
};

namespace detail {

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
    }
}

template <class T>
T require(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("missing '" + std::string(key) + "' in " + where);
    return get_or<T>(obj, key, T{}, where);
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

/// Rethrows library validation errors as configuration errors.
template <class F>
auto as_config(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const DomainError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

inline ComparisonDesign parse_design(const json& j) {
    const std::string where = "design";
    check_keys(j, {"alpha", "power", "d", "delta", "sigma_bound", "alternative", "test", "mu0"},
               where);
    ComparisonDesign d;
    d.alpha = get_or(j, "alpha", d.alpha, where);
    d.power_target = get_or(j, "power", d.power_target, where);
    d.mu0 = get_or(j, "mu0", d.mu0, where);
    return as_config(where, [&] {
        d.alternative = parse_alternative(get_or<std::string>(j, "alternative", "two_sided", where));
        d.test_family = parse_test_family(get_or<std::string>(j, "test", "t_test", where));
        if (j.contains("d")) {
            if (j.contains("delta") || j.contains("sigma_bound")) {
                throw ConfigError("design: give either d or (delta, sigma_bound), not both");
            }
            d.mres_d = require<double>(j, "d", where);
        } else if (j.contains("delta")) {
            if (!j.contains("sigma_bound")) {
                throw ConfigError(
                    "design: delta needs sigma_bound, an upper bound on the total standard deviation");
            }
            d.mres_d = mres_from_delta(require<double>(j, "delta", where),
                                       require<double>(j, "sigma_bound", where));
        } else {
            throw ConfigError("design: missing d (or delta with sigma_bound)");
        }
        d.validate();
        return d;
    });
}

inline SamplingConfig parse_sampling(const json& j) {
    const std::string where = "sampling";
    check_keys(j, {"se_max", "n0", "n_max", "diff_kind", "se_method", "bootstrap_resamples",
                   "bootstrap_seed", "force_balance", "batch"},
               where);
    SamplingConfig s;
    s.se_max = get_or(j, "se_max", s.se_max, where);
    s.n0 = get_or(j, "n0", s.n0, where);
    s.n_max = get_or(j, "n_max", s.n_max, where);
    s.bootstrap.resamples = get_or(j, "bootstrap_resamples", s.bootstrap.resamples, where);
    s.bootstrap.rng_seed = get_or(j, "bootstrap_seed", s.bootstrap.rng_seed, where);
    s.force_balance = get_or(j, "force_balance", s.force_balance, where);
    s.batch = get_or(j, "batch", s.batch, where);
    return as_config(where, [&] {
        s.diff_kind = parse_diff_kind(get_or<std::string>(j, "diff_kind", "simple", where));
        s.se_method = parse_se_method(get_or<std::string>(j, "se_method", "parametric", where));
        s.validate();
        return s;
    });
}

inline LatentEffect parse_latent(const std::string& s) {
    if (s == "none") return LatentEffect::none;
    if (s == "additive") return LatentEffect::additive;
    if (s == "multiplicative") return LatentEffect::multiplicative;
    throw ConfigError("unknown latent effect '" + s + "'");
}

inline AlgorithmSpec parse_algorithm(const json& j, const std::filesystem::path& base,
                                     const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    AlgorithmSpec spec;
    spec.alias = require<std::string>(j, "alias", where);
    if (spec.alias.empty()) throw ConfigError(where + ": alias must not be empty");
    const std::string kind = require<std::string>(j, "kind", where);
    spec.kind = as_config(where, [&] { return parse_runner_kind(kind); });
    spec.concurrent_safe = get_or(j, "concurrent_safe", true, where);
    switch (spec.kind) {
        case RunnerKind::subprocess: {
            check_keys(j, {"alias", "kind", "concurrent_safe", "command", "timeout_s"}, where);
            auto cmd = require<std::vector<std::string>>(j, "command", where);
            if (cmd.empty()) throw ConfigError(where + ": command must not be empty");
            SubprocessParams p;
            p.executable = cmd.front();
            if (p.executable.find('/') != std::string::npos) {
                p.executable = resolve(base, p.executable).string();
            }
            p.args.assign(cmd.begin() + 1, cmd.end());
            p.timeout_s = get_or(j, "timeout_s", kDefaultTimeoutSeconds, where);
            if (!(p.timeout_s > 0.0)) throw ConfigError(where + ": timeout_s must be positive");
            spec.params = p;
            break;
        }
        case RunnerKind::synthetic_normal:
        case RunnerKind::synthetic_lognormal: {
            check_keys(j, {"alias", "kind", "concurrent_safe", "mu", "sigma", "latent"}, where);
            SyntheticParams p;
            p.mu = get_or(j, "mu", p.mu, where);
            p.sigma = get_or(j, "sigma", p.sigma, where);
            p.latent = parse_latent(get_or<std::string>(j, "latent", "none", where));
            if (!(p.sigma >= 0.0)) throw ConfigError(where + ": sigma must be >= 0");
            spec.params = p;
            break;
        }
        case RunnerKind::demo_sann_tsp: {
            check_keys(j, {"alias", "kind", "concurrent_safe", "temperature", "budget",
                           "steps_per_temperature"},
                       where);
            AnnealingParams p;
            p.temperature = get_or(j, "temperature", p.temperature, where);
            p.budget = get_or(j, "budget", p.budget, where);
            p.steps_per_temperature = get_or(j, "steps_per_temperature", p.steps_per_temperature, where);
            if (!(p.temperature > 0.0) || p.budget < 1 || p.steps_per_temperature < 1) {
                throw ConfigError(where + ": annealing parameters must be positive");
            }
            spec.params = p;
            break;
        }
    }
    return spec;
}

inline InstanceRef parse_instance(const json& j, const std::filesystem::path& base,
                                  const std::string& where) {
    check_keys(j, {"id", "path", "baseline", "phi", "tsp"}, where);
    InstanceRef inst;
    inst.id = require<std::string>(j, "id", where);
    if (inst.id.empty()) throw ConfigError(where + ": id must not be empty");
    const int kinds = static_cast<int>(j.contains("path")) +
                      static_cast<int>(j.contains("baseline") || j.contains("phi")) +
                      static_cast<int>(j.contains("tsp"));
    if (kinds > 1) throw ConfigError(where + ": mixes payload kinds");
    if (j.contains("path")) {
        inst.payload = FilePayload{resolve(base, require<std::string>(j, "path", where)).string()};
    } else if (j.contains("tsp")) {
        const json& t = j.at("tsp");
        const std::string tw = where + ".tsp";
        check_keys(t, {"cities", "seed", "side", "matrix"}, tw);
        if (t.contains("matrix")) {
            auto rows = require<std::vector<std::vector<double>>>(t, "matrix", tw);
            inst.payload = TspPayload{std::make_shared<const DistanceMatrix>(
                as_config(tw, [&] { return DistanceMatrix(std::move(rows)); }))};
        } else {
            const auto cities = require<std::size_t>(t, "cities", tw);
            const auto seed = get_or<std::uint64_t>(t, "seed", 0, tw);
            const double side = get_or(t, "side", 4000.0, tw);
            inst.payload = TspPayload{std::make_shared<const DistanceMatrix>(
                as_config(tw, [&] { return make_random_tsp(cities, seed, side); }))};
        }
    } else {
        inst.payload = SyntheticPayload{get_or(j, "baseline", 0.0, where), get_or(j, "phi", 0.0, where)};
    }
    return inst;
}

inline std::vector<InstanceRef> parse_instance_list(const json& list,
                                                    const std::filesystem::path& base,
                                                    const std::string& where) {
    if (!list.is_array()) throw ConfigError(where + " must be an array");
    std::vector<InstanceRef> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        out.push_back(parse_instance(list[i], base, where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

}  // namespace detail

/// Reads an instance manifest file.
inline std::vector<InstanceRef> load_manifest(const std::filesystem::path& path) {
    const json j = detail::read_json_file(path);
    detail::check_keys(j, {"instances"}, "manifest " + path.string());
    if (!j.contains("instances")) throw ConfigError("manifest " + path.string() + " lists no instances");
    return detail::parse_instance_list(j.at("instances"), path.parent_path(), "manifest instances");
}

/// Settings that take precedence over the config file. Explicit values win
/// over the environment variables.
struct ConfigOverrides {
    bool use_environment = true;
    std::optional<std::uint64_t> master_seed;
    std::optional<int> workers;
};

/// Parses a config document; `base` is the directory relative paths resolve against.
inline ExperimentConfig parse_config(json j, const std::filesystem::path& base,
                                     const ConfigOverrides& overrides = {}) {
    detail::check_keys(j, {"design", "sampling", "algorithms", "instances", "synthetic_pool",
                           "master_seed", "workers", "output_dir", "use_all_instances",
                           "sigma_estimate", "diagnostics_resamples"},
                       "config");
    ExperimentConfig cfg;
    if (!j.contains("design")) throw ConfigError("config has no design section");
    cfg.design = detail::parse_design(j.at("design"));
    cfg.sampling = detail::parse_sampling(j.value("sampling", json::object()));
    cfg.master_seed = detail::get_or<std::uint64_t>(j, "master_seed", 0, "config");
    cfg.workers = detail::get_or(j, "workers", 1, "config");
    cfg.use_all_instances = detail::get_or(j, "use_all_instances", false, "config");
    cfg.diagnostics_resamples = detail::get_or(j, "diagnostics_resamples", 999, "config");
    if (cfg.diagnostics_resamples < 100) throw ConfigError("diagnostics_resamples must be >= 100");
    if (j.contains("sigma_estimate")) {
        cfg.sigma_estimate = detail::require<double>(j, "sigma_estimate", "config");
    }
    if (j.contains("output_dir")) {
        cfg.output_dir = detail::resolve(base, detail::require<std::string>(j, "output_dir", "config"));
    } else {
        cfg.output_dir = base / cfg.output_dir;
    }

    if (overrides.use_environment) {
        if (auto w = detail::env("ALGOCMP_WORKERS")) {
            try {
                cfg.workers = std::stoi(*w);
            } catch (const std::exception&) {
                throw ConfigError("ALGOCMP_WORKERS must be an integer");
            }
        }
        if (auto s = detail::env("ALGOCMP_SEED")) {
            try {
                cfg.master_seed = std::stoull(*s);
            } catch (const std::exception&) {
                throw ConfigError("ALGOCMP_SEED must be an unsigned integer");
            }
        }
    }
    if (overrides.master_seed) cfg.master_seed = *overrides.master_seed;
    if (overrides.workers) cfg.workers = *overrides.workers;
    j["master_seed"] = cfg.master_seed;
    if (cfg.workers < 1) throw ConfigError("workers must be at least 1");

    std::optional<SyntheticPool> pool;
    if (j.contains("synthetic_pool")) {
        const json& sp = j.at("synthetic_pool");
        const std::string where = "synthetic_pool";
        detail::check_keys(sp, {"n", "delta", "sigma_phi", "noise_sd", "seed", "diff_kind", "baseline"},
                           where);
        pool = detail::as_config(where, [&] {
            return build_synthetic_pool(
                detail::require<std::size_t>(sp, "n", where), detail::get_or(sp, "delta", 0.0, where),
                detail::get_or(sp, "sigma_phi", 1.0, where), detail::get_or(sp, "noise_sd", 1.0, where),
                detail::get_or<std::uint64_t>(sp, "seed", 0, where),
                parse_diff_kind(detail::get_or<std::string>(sp, "diff_kind", "simple", where)),
                detail::get_or(sp, "baseline", 0.0, where));
        });
    }

    if (j.contains("instances")) {
        if (pool) throw ConfigError("config: give either instances or synthetic_pool, not both");
        const json& inst = j.at("instances");
        if (inst.is_string()) {
            const std::filesystem::path manifest = detail::resolve(base, inst.get<std::string>());
            cfg.instances = load_manifest(manifest);
            // The manifest's content, not its location, belongs to the fingerprint.
            std::ifstream in(manifest);
            std::stringstream text;
            text << in.rdbuf();
            j["instances"] = {{"manifest_digest", detail::hex64(detail::fnv1a(text.str()))}};
        } else {
            cfg.instances = detail::parse_instance_list(inst, base, "instances");
        }
    } else if (pool) {
        cfg.instances = pool->instances;
    } else {
        throw ConfigError("config has neither instances nor synthetic_pool");
    }
    if (cfg.instances.empty()) throw ConfigError("instance pool is empty");

    if (j.contains("algorithms")) {
        const json& algs = j.at("algorithms");
        if (!algs.is_array() || algs.size() != 2) {
            throw ConfigError("algorithms must list exactly two algorithms");
        }
        cfg.algorithm1 = detail::parse_algorithm(algs[0], base, "algorithms[0]");
        cfg.algorithm2 = detail::parse_algorithm(algs[1], base, "algorithms[1]");
    } else if (pool) {
        cfg.algorithm1 = pool->algorithm1;
        cfg.algorithm2 = pool->algorithm2;
    } else {
        throw ConfigError("config lists no algorithms");
    }
    if (cfg.algorithm1.alias == cfg.algorithm2.alias) {
        throw ConfigError("algorithm aliases must differ");
    }

    j.erase("workers");
    j.erase("output_dir");
    cfg.fingerprint = detail::hex64(detail::fnv1a(j.dump()));
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    const ConfigOverrides& overrides = {}) {
    return parse_config(detail::read_json_file(path), path.parent_path(), overrides);
}

}  // namespace algocmp
