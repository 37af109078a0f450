#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fungible {

/// Base for every recoverable numerical failure raised by the library.
/// The CLI maps these to exit code 1.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// (I - A) is numerically singular at the requested parameter vector.
class SingularStructure : public DomainError {
public:
    using DomainError::DomainError;
};

class NotPositiveDefinite : public DomainError {
public:
    enum class Which { Sample, Implied, Hessian, Population };

    NotPositiveDefinite(Which which, const std::string& what)
        : DomainError(what), which_(which) {}

    Which which() const noexcept { return which_; }

private:
    Which which_;
};

class NoConvergence : public DomainError {
public:
    NoConvergence(int iterations, double grad_norm)
        : DomainError("no convergence after " + std::to_string(iterations) +
                      " iterations (gradient max-norm " + std::to_string(grad_norm) + ")"),
          iterations_(iterations), grad_norm_(grad_norm) {}

    int iterations() const noexcept { return iterations_; }
    double grad_norm() const noexcept { return grad_norm_; }

private:
    int iterations_;
    double grad_norm_;
};

/// No perturbation magnitude inside the admissible bracket reaches the RMSEA target.
class TargetUnreachable : public DomainError {
public:
    using DomainError::DomainError;
};

/// The discrepancy never reaches the contour level before Sigma(theta) leaves the
/// positive definite cone along the ray.
class ContourEscapesDomain : public DomainError {
public:
    using DomainError::DomainError;
};

class DegenerateSample : public DomainError {
public:
    using DomainError::DomainError;
};

/// Malformed model / design / covariance input.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace fungible
