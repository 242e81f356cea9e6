#pragma once

#include <stdexcept>
#include <string>

namespace parahom {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inputs that violate an operation's preconditions: wrong rank, mismatched
// grids, cylinders that do not fit, invalid ensemble or solver settings.
class DomainError : public Error {
public:
    using Error::Error;
};

class FieldFormatError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

// A computed object failed one of its structural checks (ellipticity of the
// homogenized matrix, divergence identity, caloric residual gate...).
class InvariantError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace parahom
