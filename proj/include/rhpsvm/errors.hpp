#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rhpsvm {

/// Parameter outside its mathematical domain (negative s, tau > 1, NaN input).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller misuse: shape mismatches, empty inputs, inverted ranges.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed text input. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Configuration that is valid in general but not supported on the chosen path.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Iterative solver failed to reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<double> last_iterate, double residual,
              int outer_iteration = -1)
      : std::runtime_error(what),
        last_iterate_(std::move(last_iterate)),
        residual_(residual),
        outer_iteration_(outer_iteration) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }
  /// CCCP iteration the failure occurred in, -1 outside the outer loop.
  int outer_iteration() const noexcept { return outer_iteration_; }

 private:
  std::vector<double> last_iterate_;
  double residual_;
  int outer_iteration_;
};

}  // namespace rhpsvm
