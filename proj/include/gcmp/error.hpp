#pragma once

#include <stdexcept>
#include <string>

namespace gcmp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

class UnsupportedAtom : public Error {
 public:
  using Error::Error;
};

/// State layout cannot be mapped onto a base-2 encoding.
class LayoutError : public Error {
 public:
  using Error::Error;
};

class InconsistentObservation : public Error {
 public:
  using Error::Error;
};

class ToleranceFailure : public Error {
 public:
  ToleranceFailure(const std::string& what, double achieved_error)
      : Error(what), achieved_error_(achieved_error) {}
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

/// Integrand returned a non-finite value.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double abscissa)
      : Error(what), abscissa_(abscissa) {}
  double abscissa() const noexcept { return abscissa_; }

 private:
  double abscissa_;
};

class StiffnessError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class InvalidStart : public Error {
 public:
  InvalidStart(const std::string& what, std::string subject)
      : Error(what), subject_(std::move(subject)) {}
  const std::string& subject() const noexcept { return subject_; }

 private:
  std::string subject_;
};

}  // namespace gcmp
