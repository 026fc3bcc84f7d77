#pragma once

#include <stdexcept>
#include <string>

namespace protofsl {

// Bad input or a violated precondition. The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Failure while running an otherwise valid request (I/O, numerics). Exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

class NumericError : public RuntimeFailure {
 public:
  explicit NumericError(const std::string& what) : RuntimeFailure(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace protofsl
