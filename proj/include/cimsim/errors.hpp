#pragma once

#include <stdexcept>
#include <string>

namespace cim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numeric argument lies outside its domain (eta <= 0, loss >= 1, ...).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Mode index out of range or an illegal index combination.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Structural misuse, e.g. discarding every mode of a state.
class InvalidOperation : public Error {
public:
    using Error::Error;
};

/// A covariance block is not positive definite.
class PhysicalityError : public Error {
public:
    using Error::Error;
};

/// Homodyne on a quadrature whose variance is numerically zero.
class DegenerateMeasurement : public Error {
public:
    using Error::Error;
};

class SingularMatrix : public Error {
public:
    using Error::Error;
};

/// Raised when a frustrated ring is asked for an all-ferromagnetic gauge.
class GaugeError : public Error {
public:
    using Error::Error;
};

class UnsupportedParity : public Error {
public:
    using Error::Error;
};

class NoSteadyState : public Error {
public:
    using Error::Error;
};

class ConditioningError : public Error {
public:
    using Error::Error;
};

/// Configuration file or flag could not be parsed or failed validation.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace cim
