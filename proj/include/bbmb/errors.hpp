#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bbmb {

/// Precondition of an operation was not met by the caller.
class ContractViolation : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of the operation (e.g. t <= 0).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Value outside the range that an inverse map can reach on its bracket.
class OutOfRangeError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

/// An iterative solve failed to reach its tolerance.
class NumericError : public std::runtime_error {
public:
  NumericError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

/// A structural invariant of a data object was violated.
class InvariantViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Non-finite value produced during time integration.
class BlowUpError : public std::runtime_error {
public:
  BlowUpError(std::size_t node, double t)
      : std::runtime_error("non-finite value at node " + std::to_string(node) +
                           ", t = " + std::to_string(t)),
        node_(node), t_(t) {}
  std::size_t node() const noexcept { return node_; }
  double time() const noexcept { return t_; }

private:
  std::size_t node_;
  double t_;
};

/// Configuration text rejected; line() is 1-based, 0 when not tied to a line.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

} // namespace bbmb
