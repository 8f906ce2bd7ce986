#pragma once

#include <stdexcept>
#include <string>

namespace mcf {

/// Base of every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A caller broke a precondition (wrong dimension, missing Hessian, ...).
struct ContractViolation : Error {
  using Error::Error;
};

/// A chart point left the unit ball, i.e. the light cone of the origin.
struct LightConeViolation : Error {
  using Error::Error;
};

/// The surface is not spacelike at some point (v^2 <= 0).
struct SpacelikeViolation : Error {
  using Error::Error;
};

/// An argument lies outside the admissible domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

/// The explicit step would have to shrink below dt_min.
struct StiffnessError : Error {
  using Error::Error;
};

/// A run configuration failed validation; what() lists every violation.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace mcf
