#pragma once

#include <stdexcept>
#include <string>

namespace spcp {

/// Shapes or ranks that do not fit the requested operation.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A parameter outside its documented range (negative lambda, fraction > 1, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative kernel hit its cap or produced non-finite values.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-convergence of an iterative method that still has a usable iterate.
/// The best iterate seen is attached so callers can decide to keep it.
template <class Iterate>
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, Iterate best)
        : NumericalError(what), best_(std::move(best)) {}

    const Iterate& best() const noexcept { return best_; }

private:
    Iterate best_;
};

} // namespace spcp
