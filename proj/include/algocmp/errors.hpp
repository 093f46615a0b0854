#pragma once

#include <stdexcept>
#include <string>

namespace algocmp {

/// Invalid argument or out-of-domain input to a numeric routine.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A modelling assumption does not hold for the observed data
/// (e.g. a nonpositive reference mean under percent differences).
class AssumptionViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The data make a statistic undefined (zero variance, all ties, ...).
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by se_percent when the simple difference is exactly zero.
class DegenerateRatioError : public DegenerateError {
public:
    using DegenerateError::DegenerateError;
};

/// A single algorithm run failed: nonzero exit, unparsable output, timeout.
class RunnerError : public std::runtime_error {
public:
    RunnerError(const std::string& what, std::string output_excerpt = {})
        : std::runtime_error(what), excerpt_(std::move(output_excerpt)) {}

    const std::string& output_excerpt() const noexcept { return excerpt_; }

private:
    std::string excerpt_;
};

/// Malformed configuration, manifest or journal.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace algocmp
