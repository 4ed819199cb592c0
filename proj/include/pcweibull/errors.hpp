#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcweibull {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (e.g. a non-positive shape).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature ran out of subdivisions. Carries the best estimate reached.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double estimate, double abs_error)
        : Error(what), estimate_(estimate), abs_error_(abs_error) {}

    double estimate() const noexcept { return estimate_; }
    double abs_error() const noexcept { return abs_error_; }

private:
    double estimate_;
    double abs_error_;
};

/// The function does not change sign on the supplied bracket.
class BracketError : public Error {
public:
    using Error::Error;
};

/// A shape or distance falls where double precision cannot represent the answer
/// (Gamma(1/alpha) overflow below the shape floor, or alpha beyond DBL_MAX).
class SaturationError : public Error {
public:
    using Error::Error;
};

/// Vector/matrix dimensions disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A computation produced a non-finite value. `index()` names the offending
/// observation when there is one.
class NumericError : public Error {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    explicit NumericError(const std::string& what, std::size_t index = npos)
        : Error(what), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// The requested engine cannot handle the problem (e.g. grid with K > 2).
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// Malformed external input (CSV rows, configuration files).
class InputError : public Error {
public:
    InputError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
        : Error(what), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

}  // namespace pcweibull
