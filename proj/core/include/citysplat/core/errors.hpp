#pragma once

#include <stdexcept>
#include <string>

namespace citysplat {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or out-of-domain numeric argument.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Unreadable, truncated or semantically invalid input data (CLI exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

/// A file is structurally readable but lacks a required field.
class SchemaError : public DataError {
public:
    using DataError::DataError;
};

} // namespace citysplat
