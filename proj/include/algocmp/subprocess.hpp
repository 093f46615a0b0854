#pragma once

// Launch an external solver, capture its output, enforce a timeout.
// POSIX only.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "algocmp/errors.hpp"

namespace algocmp {

struct ProcessResult {
    int exit_code = -1;        ///< valid when exited normally
    int term_signal = 0;       ///< nonzero when killed by a signal
    bool timed_out = false;
    std::string stdout_text;
    std::string stderr_text;
    double wall_time = 0.0;
};

namespace detail {

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Fd& operator=(Fd&& other) noexcept {
        if (this != &other) {
            reset();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }
    ~Fd() { reset(); }

    int get() const noexcept { return fd_; }
    void reset() noexcept {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

inline void make_pipe(Fd& read_end, Fd& write_end) {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) {
        throw RunnerError(std::string("pipe2 failed: ") + std::strerror(errno));
    }
    read_end = Fd(fds[0]);
    write_end = Fd(fds[1]);
}

}  // namespace detail

/// Run argv[0] with arguments, killing the process group after timeout_s.
inline ProcessResult run_process(const std::vector<std::string>& argv, double timeout_s) {
    if (argv.empty()) throw RunnerError("empty command line");
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const std::string& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    detail::Fd out_r, out_w, err_r, err_w;
    detail::make_pipe(out_r, out_w);
    detail::make_pipe(err_r, err_w);

    const auto start = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) throw RunnerError(std::string("fork failed: ") + std::strerror(errno));
    if (pid == 0) {
        // Child: only async-signal-safe calls from here on.
        ::setpgid(0, 0);
        ::dup2(out_w.get(), STDOUT_FILENO);
        ::dup2(err_w.get(), STDERR_FILENO);
        ::execvp(cargv[0], cargv.data());
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    out_w.reset();
    err_w.reset();

    ProcessResult result;
    const auto deadline =
        start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                    std::chrono::duration<double>(timeout_s));
    bool out_open = true;
    bool err_open = true;
    char buf[4096];
    while (out_open || err_open) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            result.timed_out = true;
            break;
        }
        const auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        pollfd fds[2];
        nfds_t count = 0;
        if (out_open) fds[count++] = {out_r.get(), POLLIN, 0};
        if (err_open) fds[count++] = {err_r.get(), POLLIN, 0};
        const int ready = ::poll(fds, count, static_cast<int>(std::min<long long>(remaining + 1, 1000)));
        if (ready < 0) {
            if (errno == EINTR) continue;
            break;
        }
        for (nfds_t i = 0; i < count; ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            const ssize_t got = ::read(fds[i].fd, buf, sizeof buf);
            const bool is_out = fds[i].fd == out_r.get();
            if (got > 0) {
                (is_out ? result.stdout_text : result.stderr_text).append(buf, static_cast<std::size_t>(got));
            } else if (got == 0 || errno != EINTR) {
                (is_out ? out_open : err_open) = false;
            }
        }
    }
    if (result.timed_out) ::kill(-pid, SIGKILL);

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    result.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    if (WIFSIGNALED(status)) result.term_signal = WTERMSIG(status);
    return result;
}

/// The performance value reported by a solver: its last non-blank stdout
/// line, which must be a finite decimal number and nothing else.
inline std::optional<double> parse_last_line_value(std::string_view text) {
    auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
    };
    std::size_t end = text.size();
    while (end > 0 && is_space(text[end - 1])) --end;
    if (end == 0) return std::nullopt;
    std::size_t begin = text.rfind('\n', end - 1);
    begin = (begin == std::string_view::npos) ? 0 : begin + 1;
    while (begin < end && is_space(text[begin])) ++begin;
    std::string_view line = text.substr(begin, end - begin);
    if (!line.empty() && line.front() == '+') line.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
    if (ec != std::errc() || ptr != line.data() + line.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

inline std::string output_excerpt(const ProcessResult& r, std::size_t max_len = 512) {
    std::string text = r.stdout_text;
    if (!r.stderr_text.empty()) text += "\n[stderr]\n" + r.stderr_text;
    if (text.size() > max_len) text = "..." + text.substr(text.size() - max_len);
    return text;
}

}  // namespace algocmp
