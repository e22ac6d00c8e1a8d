#ifndef BMNN_ERRORS_HPP
#define BMNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bmnn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments, shape mismatches, contract violations.
struct InvalidInput : Error {
    using Error::Error;
};

// File could not be opened / read / written.
struct IoError : Error {
    using Error::Error;
};

// Wrong magic, unsupported version, malformed manifest.
struct FormatError : Error {
    using Error::Error;
};

// File ends before the declared payload does.
struct TruncationError : FormatError {
    using FormatError::FormatError;
};

// Stored content hash does not match the bytes read.
struct IntegrityError : Error {
    using Error::Error;
};

// Rejection sampling exhausted its retry budget.
struct SamplingError : Error {
    using Error::Error;
};

// Training loss became non-finite.
struct DivergenceError : Error {
    using Error::Error;
};

}  // namespace bmnn

#endif
