#pragma once

#include <stdexcept>
#include <string>

namespace eventnet {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An event arrived with a timestamp older than the current anchor.
struct OutOfOrderEvent : Error {
  using Error::Error;
};

/// Malformed file contents or an unsupported file version.
struct FormatError : Error {
  using Error::Error;
};

/// Invalid user configuration (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace eventnet
