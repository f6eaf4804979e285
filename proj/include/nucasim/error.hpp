#pragma once

#include <stdexcept>
#include <string>

namespace nucasim {

// Invalid configuration: mesh, cache, latency or workload parameters.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Bad command line or out-of-range selector (case id, sweep axis).
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// The simulated program did something illegal: use-after-free, double
// release, access outside any live region, join with no children.
class SimulationFault : public std::runtime_error {
 public:
  explicit SimulationFault(const std::string& what) : std::runtime_error(what) {}
};

// Workload output did not match the reference result.
class VerificationError : public std::runtime_error {
 public:
  explicit VerificationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nucasim
