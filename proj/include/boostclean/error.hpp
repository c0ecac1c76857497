#pragma once

#include <stdexcept>
#include <string>

namespace boostclean {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input, bad configuration or a violated precondition (CLI exit code 2).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The data is well-formed but unusable, e.g. a single-label training set (CLI exit code 3).
class DegenerateDataError : public Error {
public:
    using Error::Error;
};

} // namespace boostclean
