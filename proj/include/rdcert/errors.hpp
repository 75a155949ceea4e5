#pragma once

#include <stdexcept>
#include <string>

namespace rdcert {

// Base for every error raised by the library. The CLI maps these onto exit
// status 2 (configuration/data problems) unless noted otherwise.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CoefficientSignError : public Error {
public:
    using Error::Error;
};

// Grid too coarse for the requested number of modes, or a discretization
// check (eigenvalue bracket, trace identity) failed beyond tolerance.
class ResolutionError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class ConfigurationError : public Error {
public:
    using Error::Error;
};

class UncontrollableModeError : public Error {
public:
    using Error::Error;
};

class UnobservableModeError : public Error {
public:
    using Error::Error;
};

class AssemblyError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class NoSolutionError : public Error {
public:
    using Error::Error;
};

class ContractError : public Error {
public:
    using Error::Error;
};

class StiffnessError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

}  // namespace rdcert
