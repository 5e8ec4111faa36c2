#pragma once

#include <stdexcept>
#include <string>

namespace delaycomp {

// Base of every error the library raises. The CLI maps each subclass to a
// distinct exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad dimensions, non-positive rates, unknown config keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Step size / sampling period that cannot satisfy the timing budget.
class InfeasibleTiming : public Error {
public:
    using Error::Error;
};

// Argument outside the domain of a bound formula (e.g. T past the sampling limit).
class OutOfRange : public Error {
public:
    using Error::Error;
};

// A derivative evaluation produced NaN/Inf or the state left the sane region.
class NumericalBlowup : public Error {
public:
    NumericalBlowup(const std::string& what, double t) : Error(what), time_(t) {}
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

}  // namespace delaycomp
