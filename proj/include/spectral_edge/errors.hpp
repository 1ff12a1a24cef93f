#pragma once

#include <stdexcept>
#include <string>

namespace spectral_edge {

// Root of every error thrown by the library. Each subclass corresponds to one
// failure class a caller may want to handle separately.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class MomentUndefinedError : public Error {
 public:
  using Error::Error;
};

class UnsupportedTailError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Fixed-point / root-finding failure. Carries the last residual seen.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_residual);
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

// The requested edge equation does not apply to this environment.
class WrongRegimeError : public Error {
 public:
  using Error::Error;
};

// phi^{-1} == varsigma_3 within tolerance: no limit law is available.
class CriticalCaseError : public Error {
 public:
  using Error::Error;
};

class DegenerateSpectrumError : public Error {
 public:
  using Error::Error;
};

}  // namespace spectral_edge
