#pragma once

#include <stdexcept>
#include <string>

namespace gridloc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidCell : public Error {
public:
    using Error::Error;
};

class OutOfBounds : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Link budget cannot reach the requested link probability at any distance.
class NoCoverage : public Error {
public:
    using Error::Error;
};

class EmptyDeployment : public Error {
public:
    using Error::Error;
};

/// Every cell of the posterior received zero mass.
class DegenerateEvidence : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class UnknownNode : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace gridloc
