#pragma once

#include <stdexcept>
#include <string>

namespace etpareto {

// Bad arguments or violated preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerically singular or non-finite intermediate results.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario or model violates a named invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A strategy query asks for more than the front can deliver.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double achievable_bound)
      : std::runtime_error(what), bound_(achievable_bound) {}
  double achievable_bound() const noexcept { return bound_; }

 private:
  double bound_;
};

// Broken internal invariant (e.g. sampling an empty belief pool).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace etpareto
