#pragma once

#include <stdexcept>
#include <string>

namespace cloudsched {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that does not satisfy a documented precondition or invariant.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A trace, model or config file that cannot be read or parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A structural inconsistency detected at runtime (e.g. dispatcher over-subscription).
class StateError : public Error {
public:
    using Error::Error;
};

} // namespace cloudsched
