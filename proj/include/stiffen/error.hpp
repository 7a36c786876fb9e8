#pragma once

#include <stdexcept>
#include <string>

namespace stiffen {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or non-manifold surface input.
class MeshError : public Error {
public:
    using Error::Error;
};

/// Operation is not defined for the topology of the given mesh.
class TopologyError : public Error {
public:
    using Error::Error;
};

/// Singular systems, failed factorizations, solver residuals out of tolerance.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Input value violates a documented invariant (config, arguments, files).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Sensitivities requested for a displacement field that no longer matches the design.
class StaleStateError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A chart still violates the allowed distortion range after every fallback stage.
class GateError : public Error {
public:
    using Error::Error;
};

}  // namespace stiffen
