#pragma once

#include <stdexcept>
#include <string>

namespace planex {

// Base class for every error the library raises. The subclasses map onto the
// CLI exit codes and the service status codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller handed in something that violates a precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Input data (files, payloads, store contents) is malformed or inconsistent.
class DataError : public Error {
public:
    using Error::Error;
};

// A pipeline stage was requested before its prerequisites completed.
class StageError : public Error {
public:
    using Error::Error;
};

// The chat backend failed, timed out or answered with nothing usable.
class BackendError : public Error {
public:
    using Error::Error;
};

}  // namespace planex
