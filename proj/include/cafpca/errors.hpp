#ifndef CAFPCA_ERRORS_HPP
#define CAFPCA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cafpca {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (bad number, missing column, empty file).
class ParseError : public Error {
public:
    using Error::Error;
};

// Inputs that are individually valid but mutually inconsistent
// (covariate changes within a subject, mean/data mismatch, asymmetric grid).
class IntegrityError : public Error {
public:
    using Error::Error;
};

// Value outside the declared domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// Local fit could not be completed: window stayed empty after the
// widening fallback, or the normal equations are singular after ridging.
class SingularFitError : public Error {
public:
    using Error::Error;
};

// A smoothing pass failed at some target point.
class EstimationError : public Error {
public:
    using Error::Error;
};

// Cross-validation / model selection had no feasible candidate.
class SelectionError : public Error {
public:
    using Error::Error;
};

// Per-subject score covariance not invertible after the ridge retry.
class ConditioningError : public Error {
public:
    using Error::Error;
};

// Criterion not defined for the given inputs (e.g. AIC/BIC with sigma^2 = 0).
class CriterionUndefinedError : public Error {
public:
    using Error::Error;
};

// Numerical failure inside a solver.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace cafpca

#endif  // CAFPCA_ERRORS_HPP
