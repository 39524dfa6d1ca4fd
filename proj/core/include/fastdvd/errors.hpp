#pragma once

#include <stdexcept>
#include <string>

namespace fastdvd {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor dimension / shape contract violations.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Filesystem and image decoding failures.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed weights files. `kind` distinguishes the failure modes.
class FormatError : public Error {
public:
    enum class Kind { bad_magic, bad_version, truncated, unknown_tensor, bad_field };

    FormatError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Invalid configuration values or unknown config keys.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Non-finite values where finite ones are required (e.g. diverged training loss).
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

} // namespace fastdvd
