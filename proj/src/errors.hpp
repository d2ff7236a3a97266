// errors.hpp — exception taxonomy shared by all modules
#pragma once

#include <stdexcept>
#include <string>

namespace qcl {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad caller input: shape mismatches, non-finite data, out-of-range arguments.
struct ArgumentError : Error {
    using Error::Error;
};

// Operator validation failed (not Hermitian / not skew-Hermitian within tolerance).
struct ValidationError : Error {
    using Error::Error;
};

// The sample grid is too coarse for the requested certificate.
struct UnderResolvedError : Error {
    using Error::Error;
};

// Bracket order above the supported cap.
struct OrderCapError : Error {
    using Error::Error;
};

// Seed rejection sampling exhausted its budget.
struct NoSeedFoundError : Error {
    using Error::Error;
};

// Feedback denominator collapsed below its floor at time `time`.
struct SingularArcTransitionError : Error {
    SingularArcTransitionError(const std::string& what, double t) : Error(what), time(t) {}
    double time;
};

// Backward construction was asked to start from a state that is not on the surface.
struct NotOnSurfaceError : Error {
    using Error::Error;
};

}  // namespace qcl
