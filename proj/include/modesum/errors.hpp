#pragma once

#include <stdexcept>
#include <string>

namespace modesum {

/// Caller supplied arguments that violate an operation's contract.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A documented precondition on the numerical input does not hold
/// (e.g. Re Λ ≤ 0 where positivity is required).
class PreconditionError : public std::domain_error {
public:
    explicit PreconditionError(const std::string& what, double where = 0.0)
        : std::domain_error(what), where_(where) {}
    double where() const noexcept { return where_; }

private:
    double where_;
};

/// Numerical failure inside an otherwise valid computation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adaptive integration could not proceed; carries the last reachable point.
class IntegrationError : public NumericError {
public:
    IntegrationError(const std::string& what, double last_s)
        : NumericError(what), last_s_(last_s) {}
    double last_reached() const noexcept { return last_s_; }

private:
    double last_s_;
};

class NotImplementedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace modesum
