#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coplan {

/// Base for all errors raised by the library. `user_error()` separates bad
/// input (exit code 1 in the CLI) from internal failures (exit code 2).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, bool user = true)
      : std::runtime_error(what), user_(user) {}
  bool user_error() const noexcept { return user_; }

 private:
  bool user_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invalid file contents. `field()` names the offending key.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& what)
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A plan step that the executor refused.
class InfeasiblePlan : public Error {
 public:
  InfeasiblePlan(std::size_t step, std::string reason)
      : Error("infeasible plan at step " + std::to_string(step) + ": " + reason),
        step_(step),
        reason_(std::move(reason)) {}
  std::size_t step() const noexcept { return step_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t step_;
  std::string reason_;
};

class NoFeasiblePlan : public Error {
 public:
  using Error::Error;
};

/// Masked decoding ran out of legal actions before all tasks were visited.
class DeadEnd : public Error {
 public:
  explicit DeadEnd(std::size_t step)
      : Error("dead end at decoding step " + std::to_string(step)), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace coplan
