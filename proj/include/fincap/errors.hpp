#pragma once

#include <stdexcept>
#include <string>

namespace fincap {

// Zero direction, singular map, points on a forbidden diagonal, empty rasterization.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A Finsler structure that fails positive definiteness or Randers admissibility.
class InvalidMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-positive volume density on the sphere bundle chart.
class OrientationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration, expression or shape text; out-of-range parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Condenser plates that are empty after rasterization or closer than two cells.
class DegenerateCondenserError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// An operation called on inputs outside its stated preconditions.
class PreconditionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace fincap
