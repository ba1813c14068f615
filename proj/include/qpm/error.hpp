#pragma once

#include <stdexcept>
#include <string>

namespace qpm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wavelength outside the dispersion model's validity window.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Violated precondition on a numeric parameter.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Root solver found no sign change in its search window.
class NoRootError : public Error {
public:
    using Error::Error;
};

/// Ratio or diagnostic with a vanishing denominator.
class UndefinedValue : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

/// Malformed scenario file or command line. The CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace qpm
