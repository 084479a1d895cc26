#pragma once

#include <stdexcept>
#include <string>

namespace gfrag {

/// Base of every error raised by the library. The CLI maps the subclasses
/// onto exit codes (see tools/gfrag.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (q beyond the integrability
/// exponent, pole proximity, negative size, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class QuadratureError : public Error {
public:
    using Error::Error;
};

/// A model fails a structural requirement (no negative jumps, Cramér
/// hypothesis, spine-triplet identity, ...).
class ValidationFailure : public Error {
public:
    using Error::Error;
};

class NoNegativeRegion : public ValidationFailure {
public:
    using ValidationFailure::ValidationFailure;
};

class FlatRoot : public ValidationFailure {
public:
    using ValidationFailure::ValidationFailure;
};

/// A sampled path ended before a clock target or stopping rule was met.
class PathTooShort : public Error {
public:
    using Error::Error;
};

/// Too few or degenerate samples for an estimator.
class InsufficientData : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace gfrag
