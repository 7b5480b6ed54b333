#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "martquant/measure.hpp"
#include "martquant/primal.hpp"

namespace martquant {

/// Markov kernel from source points to a grid whose rows have barycenter equal
/// to their source point. Rows are stored in lexicographic order of sources.
class SplittingKernel {
 public:
  struct Row {
    std::vector<std::size_t> cols;  // grid indices, ascending
    std::vector<double> w;
  };

  SplittingKernel() = default;
  /// `sources` holds one point per row, row-major. Row sums must be 1 within
  /// tol::kMassInput (they are renormalized) and barycenters must match sources.
  SplittingKernel(Quantizer grid, std::vector<double> sources, std::vector<Row> rows);

  const Quantizer& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return rows_.size(); }
  std::span<const double> source(std::size_t r) const {
    return {sources_.data() + r * grid_.dim(), grid_.dim()};
  }
  const std::vector<double>& sources() const noexcept { return sources_; }
  const Row& row(std::size_t r) const { return rows_[r]; }
  const std::vector<Row>& rows() const noexcept { return rows_; }

  /// Row index whose source equals `x` exactly, or size() if absent.
  std::size_t find_row(std::span<const double> x) const;

  /// Grid weights of the image of μ; every atom of μ needs a row. Indexed like the grid.
  std::vector<double> grid_weights(const DiscreteMeasure& mu) const;
  /// ∫ Σ_γ q_x(γ)|γ − x|^p μ(dx).
  double cost(const DiscreteMeasure& mu, double p) const;

 private:
  Quantizer grid_;
  std::vector<double> sources_;
  std::vector<Row> rows_;
};

struct Split {
  std::size_t lo, hi;  // grid indices; lo == hi when x is a grid point
  double w_lo, w_hi;
};

/// Two-point split of x onto its bracketing grid points. Throws InvalidInput outside [x_1, x_N].
Split split_1d(const Quantizer& grid, double x);

struct DualQuantization {
  Quantizer grid;
  /// Masses indexed like the grid (zero allowed).
  std::vector<double> grid_weights;
  DiscreteMeasure pushforward;
  /// d_p(μ, Γ)^p.
  double distortion_p = 0.0;
  /// Present for discrete inputs.
  std::optional<SplittingKernel> kernel;
};

/// Image of μ through the 1D splitting operator, with its distortion.
DualQuantization dual_quantize_1d(const DiscreteMeasure& mu, const Quantizer& grid, double p = 2.0);
DualQuantization dual_quantize_1d(const Analytic1DMeasure& mu, const Quantizer& grid,
                                  double p = 2.0);

/// d_p(μ, Γ)^p for a grid in the closed cell [a, b] of an analytic law.
double dual_cell_cost(const Analytic1DMeasure& mu, double a, double b, double p);

/// Optimal quadratic dual grid with endpoints at the ends of the support. For
/// discrete μ the search is exact (interior points on atoms); `support` widens
/// the pinned endpoints beyond the atoms.
DualQuantization optimal_dual_1d_quadratic(const DiscreteMeasure& mu, std::size_t n,
                                           std::optional<std::pair<double, double>> support = {});

struct DualSearchOptions {
  std::size_t starts = 5;
  std::uint64_t seed = 0xd0a1;
  double tol = 1e-10;  // objective change per sweep
  std::size_t max_sweeps = 20000;
};

/// Optimal quadratic dual grid of an analytic law: coordinate descent with exact
/// per-coordinate minimization from several starts, then a Newton polish.
DualQuantization optimal_dual_1d_quadratic(const Analytic1DMeasure& mu, std::size_t n,
                                           const DualSearchOptions& opt = {});

/// Derivative-free dual grid search for general p (golden section per coordinate).
DualQuantization optimal_dual_1d(const Analytic1DMeasure& mu, std::size_t n, double p,
                                 const DualSearchOptions& opt = {});

/// d_p(μ, Γ)^p in any dimension as a minimal-cost martingale kernel onto Γ,
/// one small LP per atom. Throws InvalidInput when an atom lies outside conv(Γ).
std::pair<double, SplittingKernel> dual_distortion_lp(const DiscreteMeasure& mu,
                                                      const Quantizer& grid, double p);

}  // namespace martquant
