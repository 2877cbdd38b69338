#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phemonet {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Result dimensions would overflow.
class SizeError : public Error {
public:
    using Error::Error;
};

/// Invalid hyperparameter, scheme name, cutoff, or model layout.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or a degenerate statistic.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Dataset contents violate a precondition (missing channel, too few samples, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// A signal is too short for the requested window.
class LengthError : public Error {
public:
    using Error::Error;
};

/// Malformed binary file. Carries the byte offset where decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// File could not be opened or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace phemonet
