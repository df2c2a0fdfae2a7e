#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kicked {

/// Invalid parameter, config field, or incompatible inputs. CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure while running dynamics (as opposed to setting them up). CLI exit code 2.
class DynamicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Probability mass reached the edge band of the action lattice. Evolution
/// aborts rather than silently truncating, which would fake localization.
class EdgeLeakageError : public DynamicsError {
 public:
  EdgeLeakageError(std::int64_t step, double edge_mass, std::int64_t n_min,
                   std::int64_t n_max, std::int64_t suggested_n_min,
                   std::int64_t suggested_n_max)
      : DynamicsError("edge leakage at step " + std::to_string(step) +
                      ": mass " + std::to_string(edge_mass) +
                      " in the outer kernel bands of lattice [" +
                      std::to_string(n_min) + ", " + std::to_string(n_max) +
                      "]; rerun with a lattice of at least [" +
                      std::to_string(suggested_n_min) + ", " +
                      std::to_string(suggested_n_max) + "]"),
        step(step),
        edge_mass(edge_mass),
        suggested_n_min(suggested_n_min),
        suggested_n_max(suggested_n_max) {}

  std::int64_t step;
  double edge_mass;
  std::int64_t suggested_n_min;
  std::int64_t suggested_n_max;
};

/// A requested accuracy or size exceeds what this build is willing to allocate.
class ResourceError : public DynamicsError {
 public:
  using DynamicsError::DynamicsError;
};

/// A fit or estimator could not produce a meaningful answer from its input.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kicked
