#pragma once

#include <stdexcept>
#include <string>

namespace specflow {

/// Base class of all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input matrix violates the hermiticity tolerance.
class NonHermitianError : public Error {
public:
    NonHermitianError(const std::string& what, double asymmetry)
        : Error(what), asymmetry_(asymmetry) {}

    /// Measured max-norm of A - A*.
    double asymmetry() const noexcept { return asymmetry_; }

private:
    double asymmetry_;
};

/// A scalar function was evaluated where it is undefined (NaN/Inf result).
class DomainError : public Error {
public:
    using Error::Error;
};

/// An operation's precondition failed (non-invertible endpoint, bad delta, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Adaptive refinement exhausted its budget before reaching the tolerance.
/// Carries the partial value and the error estimate at the point of failure.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double partial_value, double error_estimate)
        : Error(what), partial_value_(partial_value), error_estimate_(error_estimate) {}

    double partial_value() const noexcept { return partial_value_; }
    double error_estimate() const noexcept { return error_estimate_; }

private:
    double partial_value_;
    double error_estimate_;
};

/// The trace route and the kernel/cokernel route of the relative index disagreed.
class IndexMismatchError : public Error {
public:
    IndexMismatchError(const std::string& what, long trace_route, long kernel_route)
        : Error(what), trace_route_(trace_route), kernel_route_(kernel_route) {}

    long trace_route() const noexcept { return trace_route_; }
    long kernel_route() const noexcept { return kernel_route_; }

private:
    long trace_route_;
    long kernel_route_;
};

}  // namespace specflow
