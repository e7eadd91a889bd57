#pragma once

#include <stdexcept>
#include <string>

namespace haarwalk {

/// Malformed configuration or mismatched arguments (CLI exit 64).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A resolution or size cap was exceeded (CLI exit 65).
class ResolutionError : public std::runtime_error {
public:
    explicit ResolutionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A mathematical hypothesis required by an operation does not hold for the
/// given input, e.g. the wide-set mass bound is zero (CLI exit 1).
class HypothesisError : public std::runtime_error {
public:
    explicit HypothesisError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace haarwalk
