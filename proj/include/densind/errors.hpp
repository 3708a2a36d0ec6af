#pragma once

#include <stdexcept>
#include <string>

namespace densind {

/// Thrown when an operation's inputs violate its stated preconditions
/// (duplicate names, parameters out of range, oversized subfamilies, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace densind
