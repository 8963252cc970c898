#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rdlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or violated preconditions (maps to CLI exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at a point where the kinetics are undefined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A branch fold (f_u = 0) was hit, or a window contains one.
class FoldError : public Error {
 public:
  FoldError(const std::string& what, double fold_v) : Error(what), fold_v_(fold_v) {}
  double fold_location() const noexcept { return fold_v_; }

 private:
  double fold_v_;
};

/// gamma sits on a resonance det/a0 = gamma * mu_k.
class ResonanceError : public Error {
 public:
  ResonanceError(const std::string& what, std::size_t k) : Error(what), k_(k) {}
  std::size_t mode() const noexcept { return k_; }

 private:
  std::size_t k_;
};

/// Newton iteration failed to reach the requested tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations, double last_residual)
      : Error(what), iterations_(iterations), last_residual_(last_residual) {}
  int iterations() const noexcept { return iterations_; }
  double last_residual() const noexcept { return last_residual_; }

 private:
  int iterations_;
  double last_residual_;
};

/// An iterate left the trust window around the constant state.
class WindowError : public Error {
 public:
  using Error::Error;
};

/// Perturbed-problem continuation ended on the constant solution.
class CollapseError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during time stepping.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Time step exceeds the diffusive or reaction stability bound.
class CflError : public Error {
 public:
  using Error::Error;
};

}  // namespace rdlab
