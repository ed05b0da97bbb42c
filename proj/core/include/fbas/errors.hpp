#pragma once

#include <stdexcept>
#include <string>

namespace fbas {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad call-site input (wrong dimension, non-finite value, invalid option).
struct ArgumentError : Error {
    using Error::Error;
};

/// Unknown function id or other catalog lookup failure.
struct CatalogError : Error {
    using Error::Error;
};

/// Malformed input file; message carries the offending line number.
struct ParseError : Error {
    using Error::Error;
};

/// Structurally valid input that violates a contract (coverage, sign, ...).
struct ValidationError : Error {
    using Error::Error;
};

}  // namespace fbas
