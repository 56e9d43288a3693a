#pragma once

#include <stdexcept>
#include <string>

namespace nlsq {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operand shapes do not conform (length/row/column mismatch).
class DimensionError : public Error {
public:
    using Error::Error;
};

// Input is structurally valid but numerically unusable (zero residual,
// division floor violated, negative sqrt operand, ...).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// Pivot or system too close to singular to solve.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

// NaN/Inf found where a finite value is required.
class PoisonedInputError : public Error {
public:
    using Error::Error;
};

// A size guard was exceeded (e.g. dense Jacobian too large to form).
class CapacityError : public Error {
public:
    using Error::Error;
};

// Text input could not be parsed (CSV rows, config files).
class ParseError : public Error {
public:
    using Error::Error;
};

// Binary input violates its format contract (IDX magic, truncation).
class FormatError : public Error {
public:
    using Error::Error;
};

// Experiment configuration is invalid or inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Filesystem read/write failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace nlsq
