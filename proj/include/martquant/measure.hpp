#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace martquant {

/// Tolerances shared across the library.
namespace tol {
inline constexpr double kMass = 1e-12;         // stored weights sum to 1 within this
inline constexpr double kMassInput = 1e-9;     // accepted slack on caller-supplied weights
inline constexpr double kConvexOrder = 1e-9;   // slack for potential-function comparisons
}  // namespace tol

/// Finitely supported probability measure on R^d.
///
/// Points are merged when exactly equal and stored in lexicographic order
/// (ascending in d = 1). All stored weights are strictly positive and sum to
/// one within tol::kMass. Immutable after construction.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  /// `coords` holds `weights.size()` points of dimension `dim`, row-major.
  /// Zero weights are dropped; the total mass must be 1 within tol::kMassInput.
  DiscreteMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights);

  static DiscreteMeasure from_1d(std::vector<double> points, std::vector<double> weights);
  static DiscreteMeasure dirac(std::vector<double> point);
  /// Rescales arbitrary nonnegative weights to unit mass.
  static DiscreteMeasure from_unnormalized(std::size_t dim, std::vector<double> coords,
                                           std::vector<double> weights);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  bool empty() const noexcept { return weights_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  /// Coordinate of atom i when d = 1.
  double x(std::size_t i) const { return coords_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& coords() const noexcept { return coords_; }

  std::vector<double> mean() const;
  /// ∫|x|² dμ with the Euclidean norm.
  double second_moment() const;
  /// Largest |x_i| over atoms, for scale-aware tolerances.
  double radius() const;

  /// Index of an atom exactly equal to `p`, or size() if absent.
  std::size_t find(std::span<const double> p) const;

 private:
  std::size_t dim_ = 1;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

/// Closed-form 1D laws: uniform on [a, a+s] and the power law with density
/// ρ t^(ρ-1) on t ∈ (0,1), pushed through x = a + s t.
class Analytic1DMeasure {
 public:
  enum class Family { uniform, power };

  static Analytic1DMeasure uniform(double lo, double hi);
  static Analytic1DMeasure power(double rho, double offset = 0.0, double scale = 1.0);

  Family family() const noexcept { return family_; }
  /// Exponent ρ (1 for the uniform family).
  double rho() const noexcept { return rho_; }
  double offset() const noexcept { return offset_; }
  double scale() const noexcept { return scale_; }
  double lower() const noexcept { return offset_; }
  double upper() const noexcept { return offset_ + scale_; }

  double cdf(double x) const;
  /// Inverse of cdf on (0, 1); throws InvalidInput outside the open interval.
  double quantile(double u) const;
  double density(double x) const;

  /// ∫_{lo}^{hi} x^p m(dx), exact.
  double partial_moment(int p, double lo, double hi) const;
  /// ∫_{lo}^{hi} (x - c)^k m(dx) for k = 0..max_degree.
  std::vector<double> shifted_moments(double c, double lo, double hi, int max_degree) const;
  /// ∫_{lo}^{hi} |x - c|^p m(dx) for real p ≥ 0.
  double abs_moment(double c, double p, double lo, double hi) const;
  /// ∫_{u0}^{u1} F^{-1}(u) du.
  double quantile_integral(double u0, double u1) const;

  double mean() const;
  double second_moment() const;

 private:
  Analytic1DMeasure(Family f, double rho, double offset, double scale);

  Family family_;
  double rho_;
  double offset_;
  double scale_;
};

/// φ(x) = ∫_{-∞}^x F(y) dy of a 1D discrete measure: convex, piecewise affine,
/// with kinks exactly at the atoms.
class PotentialFunction {
 public:
  explicit PotentialFunction(const DiscreteMeasure& m);

  double operator()(double x) const;

  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  /// values()[k] = φ(breakpoints()[k]).
  const std::vector<double>& values() const noexcept { return values_; }
  /// slopes()[0] = 0 applies left of the first breakpoint; slopes()[k] applies on
  /// [breakpoints()[k-1], breakpoints()[k]); the last slope is 1.
  const std::vector<double>& slopes() const noexcept { return slopes_; }
  double mean() const noexcept { return mean_; }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
  std::vector<double> slopes_;
  double mean_ = 0.0;
};

/// Atoms at the conditional means of F^{-1} over the cells [(k-1)/n, k/n],
/// each with weight 1/n. The result is dominated by m in convex order.
DiscreteMeasure discretize(const Analytic1DMeasure& m, std::size_t n);

PotentialFunction potential(const DiscreteMeasure& m);

/// μ ≤_cvx ν test for 1D discrete measures through potential functions.
bool convex_order_leq_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         double tolerance = tol::kConvexOrder);

/// Affine image x ↦ shift + factor·x of a 1D discrete measure.
DiscreteMeasure affine_image_1d(const DiscreteMeasure& m, double factor, double shift);

namespace fixtures {

/// Six-point dual quantization of U[0,1] that is convex-order incomparable with mu6_check().
DiscreteMeasure mu6();
/// Uniform-grid optimal dual quantization of U[0,1] with six points.
DiscreteMeasure mu6_check();
Analytic1DMeasure uniform01();
/// Density 2x on [0,1].
Analytic1DMeasure tri2x();
/// Density 1/(2√x) on (0,1).
Analytic1DMeasure invsqrt();
/// (u/3)δ_0 + ((1+√u)/3)δ_{√u} + ((2-√u-u)/3)δ_1, the three-point dominating family of tri2x().
DiscreteMeasure tri2x_dual_family(double u);

}  // namespace fixtures

}  // namespace martquant
