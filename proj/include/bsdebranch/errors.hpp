#pragma once

#include <stdexcept>
#include <string>

namespace bsde {

struct CoefficientError : std::runtime_error {
  explicit CoefficientError(const std::string& w) : std::runtime_error(w) {}
};

struct EllipticityError : std::runtime_error {
  explicit EllipticityError(const std::string& w) : std::runtime_error(w) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& w) : std::runtime_error(w) {}
};

// A particle tree outgrew its hard cap.
struct ExplosionError : std::runtime_error {
  explicit ExplosionError(const std::string& w) : std::runtime_error(w) {}
};

struct EstimatorError : std::runtime_error {
  explicit EstimatorError(const std::string& w) : std::runtime_error(w) {}
};

struct BoundViolationError : std::runtime_error {
  explicit BoundViolationError(const std::string& w) : std::runtime_error(w) {}
};

struct FitError : std::runtime_error {
  explicit FitError(const std::string& w) : std::runtime_error(w) {}
};

}  // namespace bsde
