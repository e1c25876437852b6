#pragma once

#include <stdexcept>
#include <string>

namespace carloss {

// Base of every error the engine raises. The CLI maps each subclass to an
// exit code (input 2, numerical 3, domain 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed files, dimension mismatches, region-set mismatches.
class InputError : public Error {
public:
    using Error::Error;
};

// A parameter outside its admissible set (rho outside its bounds, linex with
// lambda = 0, ...).
class InvalidParameter : public InputError {
public:
    using InputError::InputError;
};

// Factorization failures, overflow, degenerate ratios.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Relative risk with a zero optimal risk.
class UndefinedRatioError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Arguments outside the mathematical domain of a loss (nonpositive values for
// the power divergence loss).
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace carloss
