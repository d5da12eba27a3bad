#pragma once

#include <stdexcept>
#include <string>

namespace spdcmap {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a type invariant (non-unit vector, negative length, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Wavelength outside a material's dispersion validity range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Total internal reflection or grazing propagation at an interface.
class RefractionError : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to converge.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Signal/idler kinematics impossible (evanescent conjugate, omega out of range).
class KinematicsError : public Error {
public:
    using Error::Error;
};

/// Root search found no sign change in its bracket.
class NoSolutionError : public Error {
public:
    using Error::Error;
};

/// Phase-matching-angle constraint cannot be met at the requested pump tilt.
class ConstraintError : public Error {
public:
    using Error::Error;
};

/// Least-squares profile fit could not be performed.
class FitError : public Error {
public:
    using Error::Error;
};

/// Configuration problem; `key()` is the offending flat key path.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace spdcmap
