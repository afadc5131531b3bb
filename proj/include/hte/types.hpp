#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hte {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a function (e.g. mu on the boundary).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid survey design or dataset schema.
class DesignError : public Error {
 public:
  using Error::Error;
};

// Fitting or linear-algebra failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, Vector last_theta, int iterations)
      : NumericalError(what), last_theta_(std::move(last_theta)), iterations_(iterations) {}
  const Vector& last_theta() const { return last_theta_; }
  int iterations() const { return iterations_; }

 private:
  Vector last_theta_;
  int iterations_;
};

class RankDeficientError : public NumericalError {
 public:
  RankDeficientError(const std::string& what, Index column)
      : NumericalError(what), column_(column) {}
  Index column() const { return column_; }

 private:
  Index column_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hte
