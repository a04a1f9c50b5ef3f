#pragma once

#include <stdexcept>
#include <string>

namespace pista {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes disagree (image sizes, coil counts, channel widths, network layout).
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A configuration or argument violates its documented domain.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure (cannot open, read or write).
class IoError : public Error {
public:
    using Error::Error;
};

/// A file does not follow the expected layout (bad magic, malformed header).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Payload shorter than its header promises.
class TruncationError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Stored element type differs from the requested one.
class DtypeError : public FormatError {
public:
    using FormatError::FormatError;
};

/// File written by an unsupported format revision.
class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

namespace detail {

inline void require_shape(bool ok, const std::string& what)
{
    if (!ok) throw ShapeError(what);
}

inline void require_config(bool ok, const std::string& what)
{
    if (!ok) throw ConfigError(what);
}

} // namespace detail
} // namespace pista
