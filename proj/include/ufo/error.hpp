#pragma once

#include <stdexcept>
#include <string>

namespace ufo {

// Shape or argument contract violated by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration cannot be realized (too-short context, bad field value...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation produced a non-finite value or a run diverged.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Integration blew up; carries the time at which the state became non-finite.
class IntegrationDiverged : public NumericError {
 public:
  IntegrationDiverged(const std::string& what, double time)
      : NumericError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Inputs carry no information to act on (empty design, zero denominators,
// single-class labels...).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file or stream.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ufo
