#pragma once

#include <stdexcept>
#include <string>

namespace specmim {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidDimension : Error {
    using Error::Error;
};

// Signals fail to be unit-norm / linearly independent, or a Gram matrix is
// numerically rank-deficient.
struct DegenerateSignals : Error {
    using Error::Error;
};

// Requested quadrature kind cannot represent the model (e.g. sampler noise
// under a tensor rule).
struct UnsupportedCombination : Error {
    using Error::Error;
};

// An integrand evaluated to a non-finite value; carries the offending node.
struct NumericalDomainError : Error {
    NumericalDomainError(const std::string& msg, double at) : Error(msg), node(at) {}
    double node;
};

struct IntegrationFailure : Error {
    IntegrationFailure(const std::string& msg, double err) : Error(msg), achieved_error(err) {}
    double achieved_error;
};

// Argument outside the open domain of a resolvent-type function.
struct DomainError : Error {
    using Error::Error;
};

struct SolverFailure : Error {
    using Error::Error;
};

struct BracketError : Error {
    using Error::Error;
};

// Operation requires a conditional density the model did not declare.
struct MissingDensity : Error {
    using Error::Error;
};

// The design objective vanishes identically; no finite threshold exists.
struct DegenerateObjective : Error {
    using Error::Error;
};

// The quadratic form h'(dR/da)h varies across a multiplicity block, so the
// block overlap formula is not applicable.
struct EigenspaceInvarianceViolation : Error {
    using Error::Error;
};

// Evaluation requested within pole tolerance of an eigenvalue of the corner
// block without the projected extension enabled.
struct NearPoleError : Error {
    using Error::Error;
};

// Eigenvector reconstruction asked for an eigenvalue that does not sit above
// the bulk block.
struct NotAnOutlier : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace specmim
