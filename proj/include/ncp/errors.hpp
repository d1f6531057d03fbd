#pragma once

#include <stdexcept>
#include <string>

namespace ncp {

/// Invalid experiment or estimator configuration (bad key, out-of-range value).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input data (missing months, bad header, parse failure).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Filesystem failures: unreadable input, unwritable output directory.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace ncp
