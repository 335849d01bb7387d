#pragma once

#include <stdexcept>
#include <string>

namespace sgno {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array or grid shapes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration (unknown names, out-of-range knobs, missing data).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced during a forward pass or training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The reference solver produced a non-finite state.
class SolverDivergence : public NumericError {
 public:
  SolverDivergence(const std::string& what, long step)
      : NumericError(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Malformed or incompatible artifact on disk.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace sgno
