#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace lss {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied something that violates a precondition (dimension
/// mismatch, bad radii ordering, malformed game file, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A derivative or field evaluation produced a non-finite value.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, Eigen::VectorXd z)
      : Error(what), z_(std::move(z)) {}

  const Eigen::VectorXd& z() const { return z_; }

 private:
  Eigen::VectorXd z_;
};

/// The regularized normal matrix JᵀJ + λI could not be inverted.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, Eigen::VectorXd z, double min_singular_value)
      : Error(what), z_(std::move(z)), min_sv_(min_singular_value) {}

  const Eigen::VectorXd& z() const { return z_; }
  double min_singular_value() const { return min_sv_; }

 private:
  Eigen::VectorXd z_;
  double min_sv_;
};

/// An iterate left the finite range or the ‖z‖ ≤ 1e6 guard.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, Eigen::VectorXd last_finite, long n)
      : Error(what), last_(std::move(last_finite)), n_(n) {}

  const Eigen::VectorXd& last_finite() const { return last_; }
  long iteration() const { return n_; }

 private:
  Eigen::VectorXd last_;
  long n_;
};

}  // namespace lss
