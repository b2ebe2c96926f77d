#pragma once

#include <stdexcept>

namespace binquant {

/// Base class for all binquant errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// File content violates the expected layout (bad magic, truncation,
/// inconsistent dimensions, duplicate tokens).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A field could not be parsed (non-numeric value, malformed line).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Matrix or vector shapes do not match.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An argument is outside its valid range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: non-finite input, solver breakdown.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A computed value exceeds the representable range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// The input admits no meaningful answer (constant rankings, zero vectors).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// A requested token is not present in the vocabulary.
class NotFoundError : public Error {
public:
    using Error::Error;
};

} // namespace binquant
