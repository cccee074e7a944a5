#pragma once

#include <stdexcept>
#include <string>

namespace peps {

/// Invalid experiment configuration or incompatible shapes/dimensions.
/// CLI exit code 2.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric fault at runtime (NaN loss, NaN gradient, diverged training).
/// CLI exit code 3.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File I/O failure or malformed on-disk data. CLI exit code 4.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace peps
