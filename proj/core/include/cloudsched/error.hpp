#pragma once

#include <stdexcept>
#include <string>

namespace cloudsched {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter set, generator range, or experiment document is malformed.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A workload, DAG, or assignment violates a structural invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An operation was invoked on a state that does not satisfy its precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A vector or matrix has the wrong dimension.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A computation produced a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Policy training diverged.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// A problem instance is too large for exhaustive search.
class SizeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace cloudsched
