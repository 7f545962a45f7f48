#pragma once

#include <stdexcept>
#include <string>

namespace qws {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A standing assumption on the input data is violated (coin normalization,
/// |alpha| bounds, malformed profile documents, ...).
struct ValidationError : Error {
  using Error::Error;
};

/// Unsupported configuration knob (norm exponents, grid sizes, CLI flags).
struct ConfigError : Error {
  using Error::Error;
};

/// Evolution would push amplitude across the window boundary.
struct WindowOverflowError : Error {
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation
/// (branch points, strip bounds, degenerate quasi-momenta, kernel poles).
struct DomainError : Error {
  using Error::Error;
};

/// The Jost solver could not produce a trustworthy solution.
struct SolverError : Error {
  using Error::Error;
};

/// Two routes that must agree do not, or a computed quantity violates an
/// exact structural identity beyond tolerance.
struct NumericalConsistencyError : Error {
  using Error::Error;
};

}  // namespace qws
