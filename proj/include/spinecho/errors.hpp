#pragma once

#include <stdexcept>
#include <string>

namespace spinecho {

/// Invalid parameters, schedules or inputs detected before any work is done.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The integrator produced non-finite amplitudes or exceeded the norm-drift budget.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double time)
        : std::runtime_error(what), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

/// A rate fit was refused (too few usable points, nonpositive intercept, ...).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace spinecho
