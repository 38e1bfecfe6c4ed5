#ifndef PERPSCALE_ERROR_HPP
#define PERPSCALE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace perpscale {

/// Malformed input: unreadable files, ragged rows, non-finite values,
/// violated dataset invariants. Messages carry row/column or id locations.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An operation was called with out-of-range or inconsistent arguments.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure. For optimizer divergence the iteration index at which
/// a non-finite coordinate first appeared is attached.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what, long iteration = -1)
        : std::runtime_error(what), iteration_(iteration) {}

    long iteration() const { return iteration_; }

private:
    long iteration_;
};

/// A resource budget (dense affinity memory cap) was exceeded.
class BudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace perpscale

#endif
