#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "martquant/measure.hpp"

namespace martquant {

struct CouplingEntry {
  std::size_t i;  // source atom
  std::size_t j;  // target atom
  double w;
};

/// Finitely supported joint law on R^d × R^d.
///
/// Source and target atoms are canonicalized through DiscreteMeasure, so entry
/// indices address source_marginal() and target_marginal() directly. Entries
/// are sorted by (i, j) and strictly positive.
class Coupling {
 public:
  Coupling() = default;

  /// Builds a coupling from raw points and entries. Duplicate points are merged,
  /// zero entries dropped; the total mass must be 1 within tol::kMassInput.
  Coupling(std::size_t dim, std::span<const double> src_coords, std::span<const double> dst_coords,
           std::vector<CouplingEntry> entries);

  std::size_t dim() const noexcept { return source_.dim(); }
  const DiscreteMeasure& source_marginal() const noexcept { return source_; }
  const DiscreteMeasure& target_marginal() const noexcept { return target_; }
  const std::vector<CouplingEntry>& entries() const noexcept { return entries_; }

  /// Entries of source atom i as a contiguous slice.
  std::span<const CouplingEntry> row(std::size_t i) const {
    return {entries_.data() + row_start_[i], row_start_[i + 1] - row_start_[i]};
  }
  /// Markov-kernel view: the normalized row of source atom i as a measure on the target points.
  DiscreteMeasure kernel(std::size_t i) const;

  /// max over atoms of |row sum − μ_i| and |column sum − ν_j| against the given measures;
  /// +∞ when the supports differ.
  double marginal_residual(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const;
  /// max_i |Σ_j π_ij (y_j − x_i)| / (1 + |x_i|).
  double martingale_residual() const;

  /// The joint law as a measure on R^{2d} with stacked (x, y) coordinates.
  DiscreteMeasure as_joint_measure() const;

 private:
  DiscreteMeasure source_;
  DiscreteMeasure target_;
  std::vector<CouplingEntry> entries_;
  std::vector<std::size_t> row_start_{0};
};

/// A coupling whose kernel rows have barycenter equal to their source atom.
class MartingaleCoupling {
 public:
  static constexpr double kTolerance = 1e-9;

  /// Throws InvalidInput when martingale_residual() exceeds kTolerance.
  explicit MartingaleCoupling(Coupling c);

  const Coupling& coupling() const noexcept { return c_; }
  operator const Coupling&() const noexcept { return c_; }

 private:
  Coupling c_;
};

/// Transport cost c(x, y): a named analytic form or a tabulated |supp μ|×|supp ν| matrix.
struct CostSpec {
  enum class Kind { abs_power, forward_call, forward_put, scalar_product, matrix };

  Kind kind = Kind::abs_power;
  double p = 1.0;       // abs_power exponent
  double strike = 0.0;  // forward_call / forward_put
  std::vector<std::vector<double>> values;  // matrix

  /// |y − x|^p.
  static CostSpec abs_power(double p);
  /// (Σ_k (y_k − x_k) − K)^+.
  static CostSpec forward_call(double strike = 0.0);
  /// (K − Σ_k (y_k − x_k))^+.
  static CostSpec forward_put(double strike = 0.0);
  /// ⟨x, y⟩.
  static CostSpec scalar_product();
  static CostSpec matrix(std::vector<std::vector<double>> values);

  /// Evaluates a named form; throws InvalidInput for Kind::matrix.
  double operator()(std::span<const double> x, std::span<const double> y) const;
  /// Row-major |μ|×|ν| table.
  std::vector<double> tabulate(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const;
};

struct TransportResult {
  double value;  // optimal cost; W_p^p for w_p
  Coupling coupling;
};

struct MartingaleTransportResult {
  double value;
  MartingaleCoupling coupling;
};

enum class TransportMethod { automatic, linear_program };

/// W_p(μ, ν)^p with an optimal coupling. In d = 1 the automatic method uses the
/// comonotone quantile coupling.
TransportResult w_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                    TransportMethod method = TransportMethod::automatic);

/// W_p^p between an analytic 1D law and a discrete 1D measure through the quantile coupling.
double w_p_semidiscrete_1d(const Analytic1DMeasure& mu, const DiscreteMeasure& nu, double p);

/// Optimal cost over couplings for a tabulated cost (row-major |μ|×|ν|).
TransportResult transport_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             std::span<const double> cost);

/// M_p(μ, ν)^p with an optimal martingale coupling. Throws InfeasibleError when μ ≰_cvx ν.
MartingaleTransportResult m_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);

/// Strassen test: does a martingale coupling between μ and ν exist?
bool convex_order_feasible(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

enum class PriceBound { lower, upper };

/// V_c(μ, ν) = inf over martingale couplings of ∫c dπ, or −V_{−c}(μ, ν) for PriceBound::upper.
/// Throws InfeasibleError when μ ≰_cvx ν.
MartingaleTransportResult mot_value(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                    const CostSpec& cost, PriceBound bound = PriceBound::lower);

/// Same as mot_value for a tabulated cost (row-major |μ|×|ν|).
MartingaleTransportResult mot_value_table(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                          std::span<const double> cost);

/// Mean gap accepted before a martingale LP is built.
inline constexpr double kMeanTolerance = 1e-9;

}  // namespace martquant
