#pragma once

#include <stdexcept>
#include <string>

namespace steingauge {

// Base of every error raised by the library. Each failure mode named in the
// public contracts has its own subclass so callers can catch precisely.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Requested absolute moment order is at or above the distribution's ceiling.
class MomentDoesNotExist : public Error {
 public:
  using Error::Error;
};

// Moment order below 1.
class InvalidOrder : public Error {
 public:
  using Error::Error;
};

class SupportTooLarge : public Error {
 public:
  using Error::Error;
};

class ArityTooSmall : public Error {
 public:
  using Error::Error;
};

class ArityMismatch : public Error {
 public:
  using Error::Error;
};

class AsymmetricMatrix : public Error {
 public:
  using Error::Error;
};

class NonzeroDiagonal : public Error {
 public:
  using Error::Error;
};

class BadStandardization : public Error {
 public:
  using Error::Error;
};

// A black-box statistic on a space that cannot be enumerated needs a Monte
// Carlo budget.
class BudgetMissing : public Error {
 public:
  using Error::Error;
};

class MissingProfileEntry : public Error {
 public:
  using Error::Error;
};

class ThirdMomentNotZero : public Error {
 public:
  using Error::Error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

class EmptySample : public Error {
 public:
  using Error::Error;
};

class PanelViolatesNorms : public Error {
 public:
  using Error::Error;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

}  // namespace steingauge
