// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace eprlab {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed values handed to an operation: non-finite magnitudes,
/// unordered event streams, empty cascades.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// A run or tool was configured inconsistently (bad node counts,
/// nonpositive rates, zero pair counts).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A scenario file violates the documented schema.
class SchemaError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// A model definition is unusable, e.g. a hidden-variable density that
/// does not integrate to one.
class InvalidModelError : public Error {
public:
    using Error::Error;
};

/// An estimator was asked to run on an empty or incomplete data bin.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// The requested analysis needs information the data does not carry
/// (e.g. accidental fractions without ground-truth tags).
class UnsupportedAnalysisError : public Error {
public:
    using Error::Error;
};

/// File could not be read, written, or parsed.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace eprlab
