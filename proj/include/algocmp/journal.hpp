#pragma once

// Checkpoint journal: newline-delimited JSON records, one header followed by
// one record per finished instance. Records are appended and flushed as each
// instance completes, so an interrupted experiment can resume. A malformed
// final line (a torn write) is ignored on load.
//
//   {"record":"header","format":"algocmp-journal","version":1,
//    "fingerprint":"...","selected":["id", ...]}
//   {"record":"instance","instance_id":"...","phi_hat":...,"se_hat":...,
//    "n1":...,"n2":...,"budget_exhausted":...,"diff_kind":"simple",
//    "se_method":"parametric","iterations":...,"switched_to_bootstrap":...}

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "algocmp/design.hpp"
#include "algocmp/errors.hpp"
#include "algocmp/paired_estimators.hpp"

namespace algocmp {

struct JournalEntry {
    PairedDifference diff;
    int iterations = 0;
    bool switched_to_bootstrap = false;
};

struct JournalContents {
    std::string fingerprint;
    std::vector<std::string> selected;
    std::map<std::string, JournalEntry> completed;
};

inline constexpr int kJournalVersion = 1;

namespace detail {

inline nlohmann::json journal_row(const JournalEntry& e) {
    const PairedDifference& d = e.diff;
    return {{"record", "instance"},
            {"instance_id", d.instance_id},
            {"phi_hat", d.phi_hat},
            {"se_hat", d.se_hat},
            {"n1", d.n1},
            {"n2", d.n2},
            {"budget_exhausted", d.budget_exhausted},
            {"diff_kind", std::string(to_string(d.diff_kind))},
            {"se_method", std::string(to_string(d.se_method))},
            {"iterations", e.iterations},
            {"switched_to_bootstrap", e.switched_to_bootstrap}};
}

inline JournalEntry journal_entry(const nlohmann::json& j) {
    JournalEntry e;
    e.diff.instance_id = j.at("instance_id").get<std::string>();
    e.diff.phi_hat = j.at("phi_hat").get<double>();
    e.diff.se_hat = j.at("se_hat").get<double>();
    e.diff.n1 = j.at("n1").get<std::int64_t>();
    e.diff.n2 = j.at("n2").get<std::int64_t>();
    e.diff.budget_exhausted = j.at("budget_exhausted").get<bool>();
    e.diff.diff_kind = parse_diff_kind(j.at("diff_kind").get<std::string>());
    e.diff.se_method = parse_se_method(j.at("se_method").get<std::string>());
    e.iterations = j.at("iterations").get<int>();
    e.switched_to_bootstrap = j.at("switched_to_bootstrap").get<bool>();
    return e;
}

}  // namespace detail

inline JournalContents read_journal(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open journal " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) lines.push_back(line);
    }
    JournalContents out;
    bool have_header = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
            const std::string kind = j.at("record").get<std::string>();
            if (kind == "header") {
                if (j.at("format").get<std::string>() != "algocmp-journal" ||
                    j.at("version").get<int>() != kJournalVersion) {
                    throw ConfigError("unsupported journal format in " + path.string());
                }
                out.fingerprint = j.at("fingerprint").get<std::string>();
                out.selected = j.at("selected").get<std::vector<std::string>>();
                have_header = true;
            } else if (kind == "instance") {
                if (!have_header) throw ConfigError("journal record before header");
                JournalEntry e = detail::journal_entry(j);
                out.completed[e.diff.instance_id] = std::move(e);
            } else {
                throw ConfigError("unknown journal record '" + kind + "'");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            if (i + 1 == lines.size()) break;  // torn final write
            throw ConfigError("corrupt journal " + path.string() + " at line " +
                              std::to_string(i + 1) + ": " + e.what());
        }
    }
    if (!have_header) throw ConfigError("journal " + path.string() + " has no header");
    return out;
}

/// Append-only journal writer; safe to call from several threads.
class JournalWriter {
public:
    /// Starts a new journal, replacing any existing file.
    static JournalWriter create(const std::filesystem::path& path, const std::string& fingerprint,
                                const std::vector<std::string>& selected) {
        JournalWriter w(path, std::ios::trunc);
        const nlohmann::json header = {{"record", "header"},
                                       {"format", "algocmp-journal"},
                                       {"version", kJournalVersion},
                                       {"fingerprint", fingerprint},
                                       {"selected", selected}};
        w.write_line(header.dump());
        return w;
    }

    /// Continues an existing journal. A malformed final line is cut off first.
    static JournalWriter append(const std::filesystem::path& path) {
        truncate_torn_tail(path);
        return JournalWriter(path, std::ios::app);
    }

    JournalWriter(JournalWriter&& other) noexcept : out_(std::move(other.out_)) {}

    void write(const JournalEntry& e) {
        const std::string line = detail::journal_row(e).dump();
        std::lock_guard lock(mutex_);
        write_line(line);
    }

private:
    JournalWriter(const std::filesystem::path& path, std::ios::openmode mode)
        : out_(path, std::ios::out | mode) {
        if (!out_) throw ConfigError("cannot write journal " + path.string());
    }

    void write_line(const std::string& line) {
        out_ << line << '\n';
        out_.flush();
        if (!out_) throw ConfigError("journal write failed");
    }

    static void truncate_torn_tail(const std::filesystem::path& path) {
        std::string text;
        {
            std::ifstream in(path, std::ios::binary);
            text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        }
        std::size_t end = text.size();
        while (end > 0 && text[end - 1] == '\n') --end;
        if (end == 0) return;
        const std::size_t nl = text.rfind('\n', end - 1);
        const std::size_t begin = nl == std::string::npos ? 0 : nl + 1;
        if (nlohmann::json::accept(text.substr(begin, end - begin))) {
            if (text.back() != '\n') std::ofstream(path, std::ios::app) << '\n';
            return;
        }
        std::filesystem::resize_file(path, begin);
    }

    std::ofstream out_;
    std::mutex mutex_;
};

}  // namespace algocmp
