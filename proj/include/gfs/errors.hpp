#pragma once

#include <stdexcept>
#include <string>

namespace gfs {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent scenario/configuration input (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: non-finite state, singular elimination block,
/// failed root bracketing, and the like (CLI exit code 3).
class NumericError : public Error {
public:
    using Error::Error;
};

/// A trajectory that neither settled nor diverged within the allowed
/// horizon, after the automatic extension (CLI exit code 4).
class InconclusiveError : public Error {
public:
    using Error::Error;
};

} // namespace gfs
