#pragma once

// Output files and printed summaries.
//
// Machine records are tab-separated with one header row and shortest
// round-trip decimals, so reading a value back gives the same double.
// Human summaries use 6 significant digits.
//
//   results.tsv       instance_id phi_hat se_hat n1 n2 budget_exhausted diff_kind se_method
//   power_curve.tsv   d power
//   diagnostics.tsv   series index x y
//                     series = qq_phi | boot_sdm | qq_boot_sdm; for boot_sdm,
//                     x is empty and y is the resampled mean

#include <charconv>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "algocmp/adaptive_sampler.hpp"
#include "algocmp/design.hpp"
#include "algocmp/experiment.hpp"
#include "algocmp/hypothesis_tests.hpp"

namespace algocmp {

inline std::string format_roundtrip(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string format_sig(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline void write_results_table(std::ostream& out, const std::vector<PairedDifference>& rows) {
    out << "instance_id\tphi_hat\tse_hat\tn1\tn2\tbudget_exhausted\tdiff_kind\tse_method\n";
    for (const PairedDifference& r : rows) {
        out << r.instance_id << '\t' << format_roundtrip(r.phi_hat) << '\t'
            << format_roundtrip(r.se_hat) << '\t' << r.n1 << '\t' << r.n2 << '\t'
            << (r.budget_exhausted ? "true" : "false") << '\t' << to_string(r.diff_kind) << '\t'
            << to_string(r.se_method) << '\n';
    }
}

inline void write_power_curve(std::ostream& out, const std::vector<PowerPoint>& curve) {
    out << "d\tpower\n";
    for (const PowerPoint& p : curve) {
        out << format_roundtrip(p.d) << '\t' << format_roundtrip(p.power) << '\n';
    }
}

inline void write_diagnostics(std::ostream& out, const DiagnosticsBundle& b) {
    out << "series\tindex\tx\ty\n";
    auto qq = [&](const char* name, const std::vector<QqPoint>& pts) {
        for (std::size_t i = 0; i < pts.size(); ++i) {
            out << name << '\t' << i << '\t' << format_roundtrip(pts[i].theoretical) << '\t'
                << format_roundtrip(pts[i].sample) << '\n';
        }
    };
    qq("qq_phi", b.qq_points);
    for (std::size_t i = 0; i < b.boot_sdm.size(); ++i) {
        out << "boot_sdm\t" << i << "\t\t" << format_roundtrip(b.boot_sdm[i]) << '\n';
    }
    qq("qq_boot_sdm", b.boot_sdm_qq);
}

inline std::string alternative_phrase(Alternative a, double mu0) {
    const std::string m = format_sig(mu0);
    switch (a) {
        case Alternative::two_sided: return "mu_D != " + m;
        case Alternative::less: return "mu_D < " + m;
        case Alternative::greater: return "mu_D > " + m;
    }
    return "?";
}

inline std::string format_report(const TestReport& r) {
    std::ostringstream s;
    s << "test: " << to_string(r.test_family) << " (H1: " << alternative_phrase(r.alternative, r.mu0)
      << ", alpha = " << format_sig(r.alpha) << ")\n";
    s << "instances: " << r.n_instances_used << "\n";
    s << "statistic: " << format_sig(r.statistic);
    if (r.df) s << "  df: " << format_sig(*r.df);
    if (r.test_family != TestFamily::t_test) s << (r.exact ? "  (exact)" : "  (normal approximation)");
    s << "\n";
    s << "p-value: " << format_sig(r.p_value) << "\n";
    s << "estimate: " << format_sig(r.estimate) << "\n";
    s << "CI (" << format_sig(100.0 * r.ci.level) << "%): [" << format_sig(r.ci.lower) << ", "
      << format_sig(r.ci.upper) << "]\n";
    if (r.one_sided_bound) {
        s << (r.alternative == Alternative::less ? "one-sided upper bound: "
                                                 : "one-sided lower bound: ")
          << format_sig(*r.one_sided_bound) << "\n";
    }
    return s.str();
}

inline std::string format_summary(const ExperimentResult& res, const ComparisonDesign& design,
                                  const std::string& alias1, const std::string& alias2) {
    std::ostringstream s;
    s << "comparison: " << alias2 << " - " << alias1 << "\n";
    s << "design: alpha = " << format_sig(design.alpha) << ", power = "
      << format_sig(design.power_target) << ", d* = " << format_sig(design.mres_d)
      << ", N* = " << res.sample_size.n_instances << " (" << to_string(design.test_family) << ")\n";
    s << "instances resumed from journal: " << res.resumed << ", sampled now: " << res.sampled
      << "\n";
    s << format_report(res.report);
    std::int64_t runs = 0;
    for (const PairedDifference& d : res.report.per_instance) runs += d.n1 + d.n2;
    s << "total runs: " << runs << "\n";
    for (const std::string& w : res.report.warnings) s << "warning: " << w << "\n";
    for (const std::string& n : res.diagnostics.notes) s << "note: " << n << "\n";
    return s.str();
}

inline std::string format_outcome(const SamplingOutcome& o) {
    std::ostringstream s;
    const PairedDifference& d = o.diff;
    s << "instance: " << d.instance_id << "\n";
    s << "n1: " << d.n1 << "\n";
    s << "n2: " << d.n2 << "\n";
    s << "phi_hat: " << format_sig(d.phi_hat) << " (" << to_string(d.diff_kind) << ")\n";
    s << "se_hat: " << format_sig(d.se_hat) << " (" << to_string(d.se_method) << ")\n";
    s << "iterations: " << o.iterations << "\n";
    s << "budget_exhausted: " << (d.budget_exhausted ? "true" : "false") << "\n";
    if (o.switched_to_bootstrap) s << "note: parametric SE undefined, switched to bootstrap\n";
    return s.str();
}

inline void write_se_trace(std::ostream& out, const SamplingOutcome& o) {
    out << "n1\tn2\tse\tmethod\n";
    for (const TraceEntry& t : o.se_trace) {
        out << t.n1 << '\t' << t.n2 << '\t' << format_roundtrip(t.se) << '\t' << to_string(t.method)
            << '\n';
    }
}

}  // namespace algocmp
