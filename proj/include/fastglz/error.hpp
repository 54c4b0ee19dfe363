#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fastglz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

/// File system failures while reading or writing results.
class IoError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "io"; }
};

/// Bad user input: out-of-range parameters, negative weights, malformed files.
class ValidationError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "validation"; }
};

class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
    const char* kind() const noexcept override { return "dimension"; }
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
    const char* kind() const noexcept override { return "parse"; }
};

class UnsupportedError : public ValidationError {
public:
    using ValidationError::ValidationError;
    const char* kind() const noexcept override { return "unsupported"; }
};

/// The active-set cap s_max was too small for the requested penalty.
class CapacityError : public ValidationError {
public:
    using ValidationError::ValidationError;
    const char* kind() const noexcept override { return "capacity"; }
};

/// Factorization failures, non-finite intermediates, convexity violations.
class NumericalError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numerical"; }
};

class ConvexityError : public NumericalError {
public:
    using NumericalError::NumericalError;
    const char* kind() const noexcept override { return "convexity"; }
};

/// An iterative method ran out of iterations. Carries per-item residuals
/// (per column for the batched solver, per problem for Newton loops).
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, std::vector<double> residuals)
        : NumericalError(what), residuals_(std::move(residuals)) {}
    explicit ConvergenceError(const std::string& what) : NumericalError(what) {}
    const char* kind() const noexcept override { return "convergence"; }
    const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

}  // namespace fastglz
