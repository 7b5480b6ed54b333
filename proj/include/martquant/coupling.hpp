#pragma once

#include <optional>
#include <vector>

#include "martquant/dual.hpp"
#include "martquant/measure.hpp"
#include "martquant/primal.hpp"
#include "martquant/transport.hpp"

namespace martquant {

/// Objects of the quantized coupling construction for one (π, Γ_μ, q) triple.
struct QuantizedCouplingBundle {
  MartingaleCoupling pi;
  Quantizer gamma_mu;
  SplittingKernel q;
  /// μ̂^N: primal image of π's first marginal.
  DiscreteMeasure mu_hat;
  /// ν̌^K: image of π's second marginal under q.
  DiscreteMeasure nu_check;
  /// π̌^K ∈ M(μ, ν̌^K): π followed by q.
  MartingaleCoupling pi_check;
  /// π̄^{N,K} ∈ M(μ̂^N, ν̌^K): π̌^K with its source projected onto Γ_μ.
  MartingaleCoupling pi_bar;
  /// e_2(Γ_μ, μ)².
  double e2_squared;
  /// ∫∫|y − ǰ|^p q_y(dǰ) ν(dy), the dual distortion of q at exponent p.
  double dual_cost_p;
  double p;
};

/// Builds π̌^K and π̄^{N,K}. Γ_μ must be stationary for π's first marginal (residual ≤ 1e-8)
/// and q needs a row for every atom of the second marginal; InvalidInput otherwise.
QuantizedCouplingBundle build_pi_bar(const MartingaleCoupling& pi, const Quantizer& gamma_mu,
                                     const SplittingKernel& q, double p = 2.0);

/// Adapted (nested) Wasserstein distance AW_p between two couplings: an outer
/// transport LP over first marginals with cost |x − x̃|^p + W_p^p(π_x, π̃_x̃).
double aw_p(const Coupling& pi, const Coupling& other, double p);

/// W_p between two couplings seen as measures on R^{2d}.
double coupling_distance_w_p(const Coupling& pi, const Coupling& other, double p);

/// Convex cost C(x, η) on (source point, kernel) pairs for weak martingale transport.
struct KernelCost {
  enum class Kind { variance, wp_to_reference, source_only };

  Kind kind = Kind::variance;
  double p = 2.0;
  /// Fixed reference for wp_to_reference; empty means δ_x at the source point.
  std::optional<DiscreteMeasure> reference;
  /// Per-atom values of C(x) for source_only, indexed like μ.
  std::vector<double> values;

  /// ∫|y − x|² η(dy).
  static KernelCost variance();
  /// W_p^p(η, ref).
  static KernelCost wp_to_reference(double p, DiscreteMeasure ref);
  /// W_p^p(η, δ_x) = ∫|y − x|^p η(dy).
  static KernelCost wp_to_source(double p);
  /// C(x, η) = g(x), independent of η.
  static KernelCost source_only(std::vector<double> values);
};

struct WeakTransportResult {
  double value;
  MartingaleCoupling coupling;
};

/// inf over π ∈ M(μ, ν) of ∫ C(x, π_x) μ(dx), solved exactly as a linear program.
WeakTransportResult wmot_value_via_kernel_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                               const KernelCost& cost);

}  // namespace martquant
