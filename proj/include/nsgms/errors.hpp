#pragma once

#include <stdexcept>
#include <string>

namespace nsgms {

// Root of every error thrown by the library. The CLI maps subclasses to exit
// codes: configuration-type errors exit with 2, numerical ones with 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class IndexOutOfRange : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

class DimensionMismatch : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

// estimator budget incompatible with the data (s >= L or s >= p)
class InfeasibleConfig : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

class WidthMismatch : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

class InsufficientData : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

class DegenerateForm : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConstructionFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace nsgms
