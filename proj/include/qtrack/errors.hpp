#pragma once

#include <stdexcept>
#include <string>

namespace qtrack {

// Base for every failure raised by the library. The CLI maps subclasses to
// exit codes (config errors vs numerical failures).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class NonNormalizableState : public Error {
public:
    using Error::Error;
};

class PropagatorSingularity : public Error {
public:
    using Error::Error;
};

class SolveFailure : public Error {
public:
    using Error::Error;
};

class EigenFailure : public Error {
public:
    using Error::Error;
};

class NonPositiveSpectrum : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class AllCensored : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace qtrack
