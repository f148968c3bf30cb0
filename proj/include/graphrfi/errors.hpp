#pragma once

#include <stdexcept>
#include <string>

namespace graphrfi {

// Bad input data or configuration: maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failure during computation (divergence, I/O): maps to CLI exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace graphrfi
