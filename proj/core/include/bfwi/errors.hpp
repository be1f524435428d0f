#pragma once

#include <stdexcept>
#include <string>

namespace bfwi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scalar parameter or inconsistent configuration.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Two arrays that must agree in shape do not.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Index (time node, record, channel) outside the valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unexpected file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A time-stepping or training loop produced non-finite values.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, long long step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  long long step() const noexcept { return step_; }

 private:
  long long step_;
};

/// Requested time step violates the CFL bound of the wave solver.
class CflError : public Error {
 public:
  CflError(const std::string& what, double limit_dt)
      : Error(what), limit_dt_(limit_dt) {}

  double limit_dt() const noexcept { return limit_dt_; }

 private:
  double limit_dt_;
};

}  // namespace bfwi
