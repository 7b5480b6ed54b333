#pragma once

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace martquant::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// min cᵀx  s.t.  A x = b,  l ≤ x ≤ u.
///
/// A is stored column-wise and sparse. Lower bounds must be finite; upper
/// bounds may be +∞.
class LinearProgram {
 public:
  explicit LinearProgram(std::size_t rows = 0);

  /// Adds a variable and returns its index. `entries` are (row, coefficient) pairs.
  std::size_t add_variable(double cost, const std::vector<std::pair<std::size_t, double>>& entries,
                           double lower = 0.0, double upper = kInfinity);
  void set_rhs(std::size_t row, double value);

  /// Builds an LP from a dense row-major m×n matrix.
  static LinearProgram dense(std::size_t rows, std::size_t cols, const std::vector<double>& a,
                             const std::vector<double>& b, const std::vector<double>& c,
                             const std::vector<double>& lower, const std::vector<double>& upper);

  std::size_t rows() const noexcept { return rhs_.size(); }
  std::size_t cols() const noexcept { return cost_.size(); }

  const std::vector<double>& rhs() const noexcept { return rhs_; }
  const std::vector<double>& cost() const noexcept { return cost_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  const std::vector<std::size_t>& col_start() const noexcept { return col_start_; }
  const std::vector<std::size_t>& row_index() const noexcept { return row_index_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Scales every objective coefficient by `factor`.
  void scale_objective(double factor);
  /// Throws InvalidInput unless dimensions, bounds and entries are consistent.
  void validate() const;

 private:
  std::vector<double> rhs_;
  std::vector<double> cost_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<std::size_t> col_start_{0};
  std::vector<std::size_t> row_index_;
  std::vector<double> values_;
};

enum class Status { optimal, infeasible, unbounded };

struct LpSolution {
  Status status = Status::infeasible;
  std::vector<double> x;
  double objective = 0.0;
  /// Multipliers of the equality rows; reduced costs are c - Aᵀy.
  std::vector<double> duals;
  std::size_t iterations = 0;
  // Post-solve diagnostics, filled when status == optimal.
  double primal_residual = 0.0;
  double complementarity_residual = 0.0;
  double duality_gap = 0.0;
};

struct SolverOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-10;
  double pivot_tol = 1e-9;
  /// Pivot cap before NumericalError; 0 picks a size-based default.
  std::size_t max_iterations = 0;
};

/// Two-phase bounded revised simplex. For the first 3·(rows+cols) pivots the
/// entering column maximizes |reduced cost| / ‖column‖ (phase-1 ties go to the
/// column with the lower objective coefficient); Bland's rule after that.
/// Deterministic for identical input. Throws NumericalError when the pivot cap is reached.
LpSolution solve(const LinearProgram& lp, const SolverOptions& options = {});

const char* to_string(Status s) noexcept;

}  // namespace martquant::lp
