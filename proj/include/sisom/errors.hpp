#pragma once

#include <stdexcept>
#include <string>

namespace sisom {

// Invalid configuration, bad input files, violated preconditions that the
// caller could have checked up front. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed file content. Messages carry a line or row number.
class ParseError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

} // namespace sisom
