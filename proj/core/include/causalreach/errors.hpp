#pragma once

#include <stdexcept>
#include <string>

namespace causalreach {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside the domain (or too close to its edge for a stencil).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Metric coefficients are singular or not of index 1.
class DegenerateMetricError : public Error {
 public:
  using Error::Error;
};

/// A control row or curve velocity leaves the causal cone.
class ConeViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace causalreach
