#pragma once

#include <stdexcept>
#include <string>

namespace singorb {

/// A loop or state came closer to the singular set {0} than the configured floor.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No radial scaling places the loop on the constraint manifold.
class ProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The loop is (numerically) constant, so no period can be recovered.
class DegenerateLoopError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The numerator of the period formula is not positive.
class NegativeRateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A certificate probe approached the singularity.
class DegenerateCertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The integrated trajectory crossed the singularity floor.
class CollisionError : public std::runtime_error {
 public:
  CollisionError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// The adaptive integrator's step size underflowed.
class StepFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration; carries the offending field name.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace singorb
