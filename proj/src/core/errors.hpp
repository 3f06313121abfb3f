#pragma once

#include <stdexcept>
#include <string>

namespace cellmat {

// Invalid user-facing configuration (maps to CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Solver did not converge after all fallbacks (maps to CLI exit code 3).
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated structural precondition or invariant.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// I/O failure (unreadable/corrupt files).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cellmat
