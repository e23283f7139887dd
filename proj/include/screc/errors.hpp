#pragma once

#include <stdexcept>
#include <string>

namespace screc {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Shapes of two operands (or of an operand and an index set) disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A scalar argument is outside its admissible range.
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

/// An iterative kernel (SVD sweep, CG, dual ascent) exhausted its budget.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// The instance sits outside the regime where a quantity is defined
/// (e.g. a tangent-restricted operator is numerically singular).
class RegimeError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents or unreadable path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace screc
