#pragma once

#include <stdexcept>
#include <string>

namespace settle {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Grids that are not cell-aligned, have different specs, or do not contain one another.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Malformed or unsupported file content.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Failure to open, read or write a file.
class IoError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

/// Invalid arguments to a computation (zero variance, single class, empty input...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or command-line usage.
class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace settle
