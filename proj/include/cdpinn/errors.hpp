#pragma once

#include <stdexcept>
#include <string>

namespace cdpinn {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The Robin 2x2 system of the closed-form solution is (numerically) singular.
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// F = 0 where a drift is required (closed form, exponential sampling).
class ZeroDrift : public Error {
public:
    using Error::Error;
};

/// Evaluation point outside the problem domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// NaN/inf encountered where finite values are required.
class NonFinite : public Error {
public:
    using Error::Error;
};

/// Quadrature rule incompatible with the formulation.
class SamplerMismatch : public Error {
public:
    using Error::Error;
};

/// Tridiagonal elimination hit a pivot below 1e-14.
class ZeroPivot : public Error {
public:
    using Error::Error;
};

} // namespace cdpinn
