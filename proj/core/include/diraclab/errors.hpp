#pragma once

#include <stdexcept>
#include <string>

namespace diraclab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates a documented precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The operator has an eigenvalue at zero so the energy split is ambiguous.
class GaplessSpectrum : public Error {
 public:
  using Error::Error;
};

/// A sector space would exceed its amplitude budget.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, std::size_t requested)
      : Error(what), requested_(requested) {}
  std::size_t requested() const noexcept { return requested_; }

 private:
  std::size_t requested_;
};

/// Krylov propagation could not meet its error tolerance.
class KrylovFailure : public Error {
 public:
  using Error::Error;
};

/// Guidance evaluated where the density vanishes.
class NodeError : public Error {
 public:
  NodeError(const std::string& what, double density)
      : Error(what), density_(density) {}
  double density() const noexcept { return density_; }

 private:
  double density_;
};

/// Thinning found a rate above its bound even after recomputation.
class RateBoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace diraclab
