#pragma once

#include <stdexcept>
#include <string>

namespace heer {

/// Base for every error raised by the library. Messages carry a module
/// prefix ("hin-graph: ...") so they can be surfaced verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, invalid ids, out-of-range parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Failure during computation (non-finite values, divergence).
class ComputeError : public Error {
 public:
  using Error::Error;
};

}  // namespace heer
