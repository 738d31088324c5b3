#pragma once

#include <stdexcept>
#include <string>

namespace pitman {

/// Rejected input: a precondition or domain constraint was violated.
/// The CLI maps this to exit code 1.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A floating evaluation could not reach a stable result even after
/// precision escalation. The CLI maps this to exit code 2.
class PrecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InputError(message);
}

}  // namespace pitman
