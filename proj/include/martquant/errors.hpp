#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace martquant {

/// Malformed input: bad parameters, inconsistent dimensions, support outside a hull.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative procedure stopped at its iteration cap before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::size_t iterations,
                   std::vector<double> last_iterate = {})
      : std::runtime_error(what), iterations_(iterations), last_(std::move(last_iterate)) {}
  std::size_t iterations() const noexcept { return iterations_; }
  /// Flattened coordinates of the final iterate, when the procedure has one.
  const std::vector<double>& last_iterate() const noexcept { return last_; }

 private:
  std::size_t iterations_;
  std::vector<double> last_;
};

/// No martingale coupling exists between the two marginals (they are not in convex order).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The simplex method broke down numerically or hit its pivot cap.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t iterations)
      : std::runtime_error(what), iterations_(iterations) {}
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

}  // namespace martquant
