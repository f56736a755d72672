#pragma once

#include <stdexcept>
#include <string>

namespace owr {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Caller passed data violating a precondition (dimension mismatch, bad range).
struct InvalidInputError : Error {
    using Error::Error;
};

/// Query issued against a model that has not seen any class/ball yet.
struct EmptyModelError : Error {
    using Error::Error;
};

/// Malformed file content; message carries line/offset context.
struct ParseError : Error {
    using Error::Error;
};

/// Inconsistent or unsatisfiable run configuration.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace owr
