#pragma once

#include <stdexcept>
#include <string>

namespace stochhom {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// RSA could not place an inclusion within the attempt budget.
class PlacementFailure : public Error {
public:
    using Error::Error;
};

/// MD relaxation left overlaps after the iteration cap.
class RelaxationFailure : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

/// Raw voxel stream length disagrees with the requested dimensions.
class SizeMismatch : public Error {
public:
    using Error::Error;
};

/// A slice in a slice stack is malformed or differs in size from the others.
class BadSlice : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class DegenerateFit : public Error {
public:
    using Error::Error;
};

/// Malformed structured-text document (sample, graph, constants, references).
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace stochhom
