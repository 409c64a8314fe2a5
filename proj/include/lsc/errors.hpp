#pragma once

#include <stdexcept>
#include <string>

namespace lsc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Index outside [0, count) for rank/unrank style lookups.
struct RangeError : Error {
    using Error::Error;
};

/// Vector is not a member of the multiset it was claimed to belong to.
struct MembershipError : Error {
    using Error::Error;
};

/// Label/dimension combination violates the zero-count construction rule.
struct ConstructionError : Error {
    using Error::Error;
};

/// Requested more classes than the system has vectors.
struct CapacityError : Error {
    using Error::Error;
};

/// System too large for an exhaustive scan.
struct SizeError : Error {
    using Error::Error;
};

/// Malformed file contents; message carries the line number.
struct ParseError : Error {
    using Error::Error;
};

/// Stored checksum does not match recomputed contents.
struct IntegrityError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

/// Non-finite values appeared in gradients or parameters.
struct DivergenceSignal : Error {
    using Error::Error;
};

/// Zero (or numerically zero) embedding fed into a similarity computation.
struct DegenerateInputError : Error {
    using Error::Error;
};

} // namespace lsc
