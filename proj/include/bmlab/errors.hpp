#pragma once

#include <stdexcept>
#include <string>

namespace bmlab {

/// Input violates an operation's stated precondition in a way the caller
/// could have checked (e.g. an unrefined path handed to the rasterizer).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Rejection sampling would need more attempts than the pilot budget allows.
class InfeasibleConditioning : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested work exceeds the memory cap.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bmlab
