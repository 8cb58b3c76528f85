#pragma once

#include <stdexcept>
#include <string>

namespace shardann {

/// Raised when arguments violate an operation's preconditions.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a file does not match the expected binary layout.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace shardann
