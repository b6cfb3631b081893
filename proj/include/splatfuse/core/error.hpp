#pragma once

#include <stdexcept>
#include <string>

namespace splatfuse {

// Precondition or domain violation (bad geometry, invalid config values).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when damped Gauss-Newton cannot produce a finite solution even at
// maximum damping.
class OptimizerStalled : public std::runtime_error {
 public:
  explicit OptimizerStalled(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Configuration file / flag errors. The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace splatfuse
