#pragma once

#include <stdexcept>
#include <string>

namespace chh {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed descriptors, out-of-range parameters, missing files.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A tabulated profile was asked for a derivative order it has no data for.
class UnsupportedOrder : public Error {
public:
    using Error::Error;
};

/// Numerical analysis failures. The CLI maps all of these to exit status 2.
class AnalysisError : public Error {
public:
    using Error::Error;
};

/// Quadrature did not reach the requested tolerance.
class AccuracyFailure : public AnalysisError {
public:
    AccuracyFailure(const std::string& what, double estimate)
        : AnalysisError(what + " (achieved error estimate " + std::to_string(estimate) + ")"),
          estimate_(estimate) {}
    double estimate() const noexcept { return estimate_; }

private:
    double estimate_;
};

/// The contour touches the origin, so an integer winding is not defined.
class CriticalityError : public AnalysisError {
public:
    using AnalysisError::AnalysisError;
};

/// |eps| vanishes (or nearly so) on the real line: an embedded mode.
class EmbeddedModeError : public AnalysisError {
public:
    using AnalysisError::AnalysisError;
};

/// A counting contour passed too close to a zero.
class RegionDegenerate : public AnalysisError {
public:
    using AnalysisError::AnalysisError;
};

class NoConvergence : public AnalysisError {
public:
    using AnalysisError::AnalysisError;
};

class NotFound : public AnalysisError {
public:
    using AnalysisError::AnalysisError;
};

/// The root set is not closed under the Hamiltonian reflection symmetries.
class SymmetryViolation : public AnalysisError {
public:
    using AnalysisError::AnalysisError;
};

/// gamma = -eps_I / d(eps_R)/d(omega) with a vanishing denominator only.
class PoleLikeError : public AnalysisError {
public:
    using AnalysisError::AnalysisError;
};

/// Zero structure of eps_I changed under grid refinement.
class RefinementRequired : public AnalysisError {
public:
    using AnalysisError::AnalysisError;
};

}  // namespace chh
