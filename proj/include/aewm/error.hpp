#pragma once

#include <stdexcept>
#include <string>

namespace aewm {

// Raised for config, schema, argument and input-validation failures.
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised for numeric guards and runtime component failures (exit code 1).
class ComputeError : public std::runtime_error {
  public:
    explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace aewm
