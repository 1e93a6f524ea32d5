#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace skipfree {

/// Chain states are nonnegative integers; signed so that j < n arithmetic never wraps.
using state_t = std::int64_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised when a simulated path leaves the configured state or event budget.
class ExplosionGuard : public Error {
 public:
  enum class Cause { StateCap, EventCap };

  ExplosionGuard(Cause cause, const std::string& what) : Error(what), cause_(cause) {}
  Cause cause() const noexcept { return cause_; }

 private:
  Cause cause_;
};

/// A scale table does not reach far enough to invert f at some simulated time.
class TableTooSmall : public OutOfRange {
 public:
  TableTooSmall(state_t required_n_max, const std::string& what)
      : OutOfRange(what), required_n_max_(required_n_max) {}
  state_t required_n_max() const noexcept { return required_n_max_; }

 private:
  state_t required_n_max_;
};

}  // namespace skipfree
