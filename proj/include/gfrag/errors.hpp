#pragma once

#include <stdexcept>
#include <string>

namespace gfrag {

// Base for every library failure. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: arguments, config values, tables.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(const std::string& what, double last_residual, long steps)
        : Error(what), residual(last_residual), iterations(steps) {}
    double residual;
    long iterations;
};

class DegenerateMeasurement : public Error {
public:
    using Error::Error;
};

// Diagonal 1 - 2 k_ii dx <= 0 in the brute/filtering systems.
class SingularSystem : public Error {
public:
    using Error::Error;
};

// QR diagonal 1 + a i - 2 k_ii dx <= 0.
class IllConditioned : public Error {
public:
    using Error::Error;
};

}  // namespace gfrag
