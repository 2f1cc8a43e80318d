#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sparsepick {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input (ragged CSV, wrong shape, violated invariant on load).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A CSV cell that is not a finite number.
class ParseError : public FormatError {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& what)
        : FormatError("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
          row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class EmptyInputError : public FormatError {
public:
    using FormatError::FormatError;
};

class IoError : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Input for which the operation is undefined (e.g. normalizing a zero vector).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Peak picking was requested on a fit that uses no dictionary atoms.
class NoActiveAtoms : public Error {
public:
    using Error::Error;
};

/// The alternating solver produced a non-finite objective.
class NumericalError : public Error {
public:
    NumericalError(int iteration, const std::string& what)
        : Error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

}  // namespace sparsepick
