#pragma once

#include <stdexcept>
#include <string>

namespace ddc {

// Base class for every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A token event violated its structural invariants (empty, unsorted,
// positive log-probabilities, non-finite values).
struct MalformedEventError : Error {
    using Error::Error;
};

// An argument fell outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// A numeric routine failed to converge. Never silently substituted.
struct NumericError : Error {
    using Error::Error;
};

// Path-level confidence requested for a path that produced no tokens.
struct EmptyPathError : Error {
    using Error::Error;
};

// Trend analysis requires a window of at least two samples.
struct InsufficientWindowError : Error {
    using Error::Error;
};

// Quantile-based calibration requires a minimum population size.
struct InsufficientCalibrationError : Error {
    using Error::Error;
};

// A consensus was requested but no completed path cast a vote.
struct NoAnswerError : Error {
    using Error::Error;
};

// Invalid engine/endpoint configuration, or a server lacking a
// required capability (e.g. per-token log-probabilities).
struct ConfigError : Error {
    using Error::Error;
};

// Network-level failure talking to an inference endpoint.
struct TransportError : Error {
    using Error::Error;
};

// A persisted trace was written by an incompatible schema version.
struct SchemaMismatchError : Error {
    using Error::Error;
};

}  // namespace ddc
