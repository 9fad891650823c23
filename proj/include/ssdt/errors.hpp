#pragma once
#include <stdexcept>
#include <string>

namespace ssdt {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** Shape or size of an input does not match what the operation needs. */
class DimensionError : public Error {
public:
    using Error::Error;
};

/** A weight, order, tolerance, or mode is outside its admissible set. */
class ParameterError : public Error {
public:
    using Error::Error;
};

/** The linear system has an unconstrained mode and cannot be solved. */
class SingularSystemError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/** File is readable but not a supported image flavor. */
class FormatError : public Error {
public:
    using Error::Error;
};

/** File claims a supported format but its payload is broken. */
class DecodeError : public Error {
public:
    using Error::Error;
};

/** A statistic is undefined on this input (zero variance, empty sample). */
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/** Ratio metric with a zero denominator. */
class InfiniteRatioError : public Error {
public:
    using Error::Error;
};

} // namespace ssdt
