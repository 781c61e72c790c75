#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qbeat {

/// Bad argument or precondition violation at an API boundary.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation failed to reach its requested accuracy.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Input failed a structural check (e.g. a matrix that is not unitary).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input is degenerate for the requested measure (e.g. an all-zero matrix).
class DegenerateInputError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Filesystem failure; the message carries the OS error text verbatim.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConfigIssue {
    std::size_t line = 0;  // 1-based, 0 when the issue is not tied to a line
    std::string message;
};

/// One or more line-anchored problems in a configuration document.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues)
        : std::runtime_error(render(issues)), issues_(std::move(issues)) {}

    const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
    static std::string render(const std::vector<ConfigIssue>& issues) {
        std::string out;
        for (const auto& issue : issues) {
            if (!out.empty()) out += '\n';
            if (issue.line > 0) out += "line " + std::to_string(issue.line) + ": ";
            out += issue.message;
        }
        return out;
    }

    std::vector<ConfigIssue> issues_;
};

}  // namespace qbeat
