#pragma once

#include <stdexcept>
#include <string>

namespace magloop {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (range, size, parity).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Two tangent vectors were combined although they live at different base points.
class BasePointMismatch : public Error {
public:
    using Error::Error;
};

/// A curve has (numerically) vanishing velocity somewhere.
class DegenerateCurve : public Error {
public:
    using Error::Error;
};

/// A stereographic chart was requested too close to its pole.
class ChartError : public Error {
public:
    using Error::Error;
};

/// The requested operation is not defined for this input (e.g. area of a non-simple loop).
class Unsupported : public Error {
public:
    using Error::Error;
};

/// The connection system could not be set up because the moving frame degenerates.
class LinearSolveError : public Error {
public:
    LinearSolveError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// Newton (loop or shooting) ran out of iterations.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// The loop collapsed during Newton (min speed tiny compared to mean speed).
class CollapseError : public Error {
public:
    using Error::Error;
};

/// The shooting section is (nearly) tangent to the flow.
class SectionDegeneracy : public Error {
public:
    using Error::Error;
};

/// find_two_orbits found fewer than two certified orbits.
class SearchFailure : public Error {
public:
    using Error::Error;
};

}  // namespace magloop
