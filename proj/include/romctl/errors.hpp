#pragma once

#include <stdexcept>
#include <string>

namespace romctl {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// A matrix required to be Hurwitz has an eigenvalue with real part >= -1e-12.
class NotStable : public Error {
 public:
  using Error::Error;
};

class NotStabilizable : public Error {
 public:
  using Error::Error;
};

class NotDetectable : public Error {
 public:
  using Error::Error;
};

// Iterative solver ran out of iterations; carries the final residual.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

class NotPsd : public Error {
 public:
  using Error::Error;
};

// Cholesky factorization of a matrix required to be positive definite failed.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class SingularJacobian : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class ConfigInvalid : public Error {
 public:
  using Error::Error;
};

}  // namespace romctl
