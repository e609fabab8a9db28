#pragma once

#include <stdexcept>
#include <string>

namespace bcpo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: shapes, ranges, probability rows, malformed files or config.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An operation that needs at least one record was given an empty dataset.
class EmptyDatasetError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Non-finite values or a singular system encountered during computation.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Fixed-point iteration did not reach its tolerance.
class NonConvergenceError : public NumericalError {
public:
    NonConvergenceError(const std::string& what, double residual, long iterations)
        : NumericalError(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    long iterations() const noexcept { return iterations_; }

private:
    double residual_;
    long iterations_;
};

/// No multiplier in the search bracket satisfies the trust region.
class InfeasibleTrustRegionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Filesystem failures (missing files, unwritable directories).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace bcpo
