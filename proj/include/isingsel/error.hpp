#pragma once

#include <stdexcept>
#include <string>

namespace isingsel {

/// Raised when arguments violate an operation's preconditions.
class InvalidArgument : public std::invalid_argument {
public:
  explicit InvalidArgument(const std::string &what) : std::invalid_argument(what) {}
};

/// Raised when a request exceeds a hard size cap (e.g. exact enumeration).
class ResourceLimit : public std::runtime_error {
public:
  explicit ResourceLimit(const std::string &what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string &what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string &msg) {
  if (!cond)
    throw InvalidArgument(msg);
}

} // namespace detail
} // namespace isingsel
