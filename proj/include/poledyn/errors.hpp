#pragma once

#include <stdexcept>
#include <string>

namespace poledyn {

/// Base class of everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// f, f' or an orbit step was evaluated exactly at a pole beta_i.
/// Pole equality is tested exactly at working precision; there is no
/// fuzzy pole detection.
class PoleEvaluationError : public Error {
public:
    explicit PoleEvaluationError(const std::string& what, int pole_index = -1)
        : Error(what), pole_index(pole_index) {}
    int pole_index;
};

/// Bracket expansion for a preimage exceeded its step bound. Every branch
/// is surjective onto the reals, so this cannot happen mathematically;
/// seeing it means an internal bug.
class BracketFailureError : public Error {
public:
    using Error::Error;
};

/// The requested result cannot be certified at the working precision
/// (bisection stalled, shadow verification failed before resolution, or
/// an exact-rational orbit exceeded its bit budget).
class PrecisionExhaustedError : public Error {
public:
    using Error::Error;
};

/// eps is too large for the requested construction (pole neighborhoods
/// would touch, or the disjointness threshold eps0 is exceeded).
class EpsilonTooLargeError : public Error {
public:
    using Error::Error;
};

/// An interval-count or iteration budget was exceeded.
class BudgetExceededError : public Error {
public:
    using Error::Error;
};

/// Invalid input data: a MapSpec field, a config field, or a precondition.
class InvariantViolationError : public Error {
public:
    using Error::Error;
};

} // namespace poledyn
