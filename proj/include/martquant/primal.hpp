#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "martquant/measure.hpp"
#include "martquant/transport.hpp"

namespace martquant {

/// Ordered finite grid in R^d. In d = 1 points are sorted strictly increasing.
class Quantizer {
 public:
  Quantizer() = default;
  /// `coords` holds the points row-major. 1D grids are sorted; duplicates are rejected.
  Quantizer(std::size_t dim, std::vector<double> coords);
  static Quantizer from_1d(std::vector<double> points);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  double x(std::size_t i) const { return coords_[i]; }
  const std::vector<double>& coords() const noexcept { return coords_; }

 private:
  std::size_t dim_ = 1;
  std::vector<double> coords_;
};

struct QuantizationResult {
  Quantizer quantizer;
  /// Cell masses indexed like the quantizer (zero for empty cells).
  std::vector<double> cell_weights;
  DiscreteMeasure pushforward;
  /// e_p(Γ, μ)^p.
  double distortion_p = 0.0;
  /// Law of (X̂, X); present for discrete inputs.
  std::optional<Coupling> coupling;
  std::size_t iterations = 0;
};

/// Index of a nearest grid point; ties go to the lowest index.
std::size_t project(const Quantizer& grid, std::span<const double> x);
std::size_t project(const Quantizer& grid, double x);

/// e_p(Γ, μ)^p.
double distortion(const DiscreteMeasure& mu, const Quantizer& grid, double p);
/// e_p(Γ, μ)^p by cellwise integration with Voronoi boundaries at midpoints.
double distortion(const Analytic1DMeasure& mu, const Quantizer& grid, double p);

/// Nearest-neighbour pushforward of μ onto a fixed grid.
QuantizationResult quantize(const DiscreteMeasure& mu, const Quantizer& grid, double p = 2.0);
QuantizationResult quantize(const Analytic1DMeasure& mu, const Quantizer& grid, double p = 2.0);

/// max over nonempty cells of |E[X | X̂ = x_k] − x_k|.
double stationarity_residual(const DiscreteMeasure& mu, const Quantizer& grid);
/// Same for an analytic law; cells are bounded by midpoints, so the midpoint
/// conditions hold by construction.
double stationarity_residual(const Analytic1DMeasure& mu, const Quantizer& grid);

struct LloydOptions {
  std::optional<Quantizer> init;
  std::uint64_t seed = 0x5eed;
  double tol = 1e-12;  // max point displacement
  std::size_t max_iter = 100000;
};

/// Quadratic Lloyd fixed point. Returns supp(μ) when μ has at most N atoms.
/// Throws ConvergenceError (carrying the last grid) when max_iter is reached.
QuantizationResult lloyd(const DiscreteMeasure& mu, std::size_t n, const LloydOptions& opt = {});

/// Quadratic optimal N-quantizer of an analytic 1D law: Lloyd on exact moments
/// followed by a Newton polish on the stationarity system.
QuantizationResult optimal_primal_1d(const Analytic1DMeasure& mu, std::size_t n,
                                     double tol = 1e-12);

/// Closed-form optimal grid of the density 1/(2√((x−a)/(b−a)))/(b−a) on [a, b].
Quantizer sqrt_density_grid(std::size_t n, double a = 0.0, double b = 1.0);
/// The sequence c_0 = 0, c_1 = 1, …, c_n behind sqrt_density_grid.
std::vector<double> sqrt_density_coefficients(std::size_t n);

}  // namespace martquant
