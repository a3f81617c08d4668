#pragma once

#include <stdexcept>
#include <string>

namespace skinstack {

/// Bad arguments or inputs that fail validation before any data is read
/// (missing files, inconsistent shapes, out-of-range parameters).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input file content is malformed: bad CSV rows, unknown codes, duplicates.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numeric failure during computation (non-finite loss or gradient,
/// non-converging bisection).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace skinstack
