#pragma once

#include <stdexcept>
#include <string>

namespace aisr {

// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A required input artifact (shard, checkpoint, manifest) is absent (exit code 3).
class MissingArtifactError : public std::runtime_error {
 public:
  explicit MissingArtifactError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: non-convergence, singular system, divergence (exit code 4).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solver did not reach tolerance; carries the final residual.
class SolverError : public NumericError {
 public:
  SolverError(const std::string& what, double residual)
      : NumericError(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Corrupt or malformed on-disk data.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Mismatched tensor/layer dimensions.
class ShapeError : public std::logic_error {
 public:
  explicit ShapeError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace aisr
