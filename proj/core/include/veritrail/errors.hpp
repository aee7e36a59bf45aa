#pragma once

#include <stdexcept>
#include <string>

namespace veritrail {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad configuration (invalid parameter combinations, missing settings).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem / input problems (missing files, malformed manifests).
class IoError : public Error {
public:
    using Error::Error;
};

/// Persistence format problems: version mismatch or corrupted payload.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Strict-output parsing failures (judge verdicts, enum fields).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Remote provider failure. Carries the last HTTP status (0 when the
/// request never completed) and the number of attempts made.
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, int status, int attempts)
        : Error(what), status_(status), attempts_(attempts) {}

    int status() const { return status_; }
    int attempts() const { return attempts_; }

private:
    int status_;
    int attempts_;
};

} // namespace veritrail
