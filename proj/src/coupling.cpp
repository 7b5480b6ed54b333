#include "martquant/coupling.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "martquant/errors.hpp"
#include "martquant/lp.hpp"

namespace martquant {

namespace {

constexpr double kStationarityTol = 1e-8;

void require_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidInput("p must be a finite real >= 1");
}

double pow_norm(std::span<const double> a, std::span<const double> b, double p) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  if (p == 2.0) return s;
  return std::pow(std::sqrt(s), p);
}

// Identical kernel rows collapse to one id so inner distances are solved once.
struct KernelTable {
  std::vector<DiscreteMeasure> kernels;
  std::vector<std::size_t> id;  // per source atom

  explicit KernelTable(const Coupling& c) {
    std::map<std::pair<std::vector<double>, std::vector<double>>, std::size_t> seen;
    const std::size_t n = c.source_marginal().size();
    id.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      DiscreteMeasure k = c.kernel(i);
      auto key = std::make_pair(k.coords(), k.weights());
      auto [it, fresh] = seen.emplace(std::move(key), kernels.size());
      if (fresh) kernels.push_back(std::move(k));
      id[i] = it->second;
    }
  }
};

}  // namespace

QuantizedCouplingBundle build_pi_bar(const MartingaleCoupling& pi, const Quantizer& gamma_mu,
                                     const SplittingKernel& q, double p) {
  require_p(p);
  const Coupling& c = pi.coupling();
  const DiscreteMeasure& mu = c.source_marginal();
  const DiscreteMeasure& nu = c.target_marginal();
  const std::size_t d = c.dim();
  if (gamma_mu.dim() != d || q.grid().dim() != d) {
    throw InvalidInput("grids and coupling have different dimensions");
  }
  const double res = stationarity_residual(mu, gamma_mu);
  if (res > kStationarityTol) {
    throw InvalidInput("primal grid is not stationary for the first marginal (residual " +
                       std::to_string(res) + "); the projected coupling would not be a martingale");
  }
  std::vector<std::size_t> q_row(nu.size());
  for (std::size_t j = 0; j < nu.size(); ++j) {
    q_row[j] = q.find_row(nu.point(j));
    if (q_row[j] == q.size()) {
      throw InvalidInput("the splitting kernel has no row for an atom of the second marginal");
    }
  }
  std::vector<std::size_t> proj(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) proj[i] = project(gamma_mu, mu.point(i));

  std::vector<CouplingEntry> check, bar;
  for (const auto& e : c.entries()) {
    const auto& row = q.row(q_row[e.j]);
    for (std::size_t k = 0; k < row.cols.size(); ++k) {
      const double w = e.w * row.w[k];
      check.push_back({e.i, row.cols[k], w});
      bar.push_back({proj[e.i], row.cols[k], w});
    }
  }
  const auto& grid_pts = q.grid().coords();
  Coupling pi_check(d, mu.coords(), grid_pts, std::move(check));
  Coupling pi_bar(d, gamma_mu.coords(), grid_pts, std::move(bar));

  auto mu_hat = quantize(mu, gamma_mu, 2.0);
  const auto nu_w = q.grid_weights(nu);
  DiscreteMeasure nu_check = DiscreteMeasure::from_unnormalized(d, grid_pts, nu_w);

  return QuantizedCouplingBundle{
      pi,
      gamma_mu,
      q,
      std::move(mu_hat.pushforward),
      std::move(nu_check),
      MartingaleCoupling(std::move(pi_check)),
      MartingaleCoupling(std::move(pi_bar)),
      mu_hat.distortion_p,
      q.cost(nu, p),
      p,
  };
}

double coupling_distance_w_p(const Coupling& pi, const Coupling& other, double p) {
  require_p(p);
  if (pi.dim() != other.dim()) throw InvalidInput("couplings have different dimensions");
  const auto a = pi.as_joint_measure();
  const auto b = other.as_joint_measure();
  const double v = w_p(a, b, p, TransportMethod::linear_program).value;
  return std::pow(std::max(v, 0.0), 1.0 / p);
}

double aw_p(const Coupling& pi, const Coupling& other, double p) {
  require_p(p);
  if (pi.dim() != other.dim()) throw InvalidInput("couplings have different dimensions");
  const DiscreteMeasure& mu = pi.source_marginal();
  const DiscreteMeasure& eta = other.source_marginal();
  const KernelTable ka(pi), kb(other);

  std::vector<double> inner(ka.kernels.size() * kb.kernels.size());
  for (std::size_t s = 0; s < ka.kernels.size(); ++s) {
    for (std::size_t t = 0; t < kb.kernels.size(); ++t) {
      inner[s * kb.kernels.size() + t] = w_p(ka.kernels[s], kb.kernels[t], p).value;
    }
  }
  const std::size_t n = mu.size(), m = eta.size();
  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      cost[i * m + k] = pow_norm(mu.point(i), eta.point(k), p) +
                        inner[ka.id[i] * kb.kernels.size() + kb.id[k]];
    }
  }
  const double v = transport_lp(mu, eta, cost).value;
  return std::pow(std::max(v, 0.0), 1.0 / p);
}

// ---------------------------------------------------------------------------

KernelCost KernelCost::variance() { return KernelCost{}; }

KernelCost KernelCost::wp_to_reference(double p, DiscreteMeasure ref) {
  require_p(p);
  KernelCost c;
  c.kind = Kind::wp_to_reference;
  c.p = p;
  c.reference = std::move(ref);
  return c;
}

KernelCost KernelCost::wp_to_source(double p) {
  require_p(p);
  KernelCost c;
  c.kind = Kind::wp_to_reference;
  c.p = p;
  return c;
}

KernelCost KernelCost::source_only(std::vector<double> values) {
  KernelCost c;
  c.kind = Kind::source_only;
  c.values = std::move(values);
  return c;
}

WeakTransportResult wmot_value_via_kernel_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                               const KernelCost& cost) {
  switch (cost.kind) {
    case KernelCost::Kind::variance: {
      auto r = mot_value(mu, nu, CostSpec::abs_power(2.0));
      return {r.value, std::move(r.coupling)};
    }
    case KernelCost::Kind::source_only: {
      if (cost.values.size() != mu.size()) {
        throw InvalidInput("source_only cost needs one value per atom of mu");
      }
      auto r = mot_value_table(mu, nu, std::vector<double>(mu.size() * nu.size(), 0.0));
      double v = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i) v += mu.weight(i) * cost.values[i];
      return {v, std::move(r.coupling)};
    }
    case KernelCost::Kind::wp_to_reference:
      break;
  }
  if (!cost.reference) {
    auto r = mot_value(mu, nu, CostSpec::abs_power(cost.p));
    return {r.value, std::move(r.coupling)};
  }

  // Variables π_ij and γ_ijl, the latter coupling π_x (scaled by μ_i) with the reference:
  //   Σ_j π_ij = μ_i,  Σ_i π_ij = ν_j,  Σ_j π_ij (y_j − x_i) = 0,
  //   Σ_l γ_ijl = π_ij,  Σ_j γ_ijl = μ_i ρ_l,  cost Σ γ_ijl |y_j − r_l|^p.
  const DiscreteMeasure& ref = *cost.reference;
  if (mu.dim() != nu.dim() || ref.dim() != mu.dim()) {
    throw InvalidInput("measures and reference have different dimensions");
  }
  const auto ma = mu.mean(), mb = nu.mean();
  for (std::size_t k = 0; k < ma.size(); ++k) {
    if (std::abs(ma[k] - mb[k]) > kMeanTolerance) {
      throw InfeasibleError(
          "no martingale coupling exists (Strassen): the marginals have different means");
    }
  }
  const std::size_t n = mu.size(), m = nu.size(), L = ref.size(), d = mu.dim();
  const std::size_t r_src = 0, r_dst = n, r_mart = n + (m - 1), r_link = r_mart + n * d,
                    r_ref = r_link + n * m;
  lp::LinearProgram prog(r_ref + n * L);
  for (std::size_t i = 0; i < n; ++i) prog.set_rhs(r_src + i, mu.weight(i));
  for (std::size_t j = 0; j + 1 < m; ++j) prog.set_rhs(r_dst + j, nu.weight(j));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < L; ++l) prog.set_rhs(r_ref + i * L + l, mu.weight(i) * ref.weight(l));
  }
  std::vector<std::pair<std::size_t, double>> col;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = mu.point(i);
    for (std::size_t j = 0; j < m; ++j) {
      const auto y = nu.point(j);
      col.clear();
      col.emplace_back(r_src + i, 1.0);
      if (j + 1 < m) col.emplace_back(r_dst + j, 1.0);
      for (std::size_t t = 0; t < d; ++t) {
        if (y[t] != x[t]) col.emplace_back(r_mart + i * d + t, y[t] - x[t]);
      }
      col.emplace_back(r_link + i * m + j, -1.0);
      prog.add_variable(0.0, col);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t l = 0; l < L; ++l) {
        prog.add_variable(pow_norm(nu.point(j), ref.point(l), cost.p),
                          {{r_link + i * m + j, 1.0}, {r_ref + i * L + l, 1.0}});
      }
    }
  }
  const auto sol = lp::solve(prog);
  if (sol.status == lp::Status::infeasible) {
    throw InfeasibleError(
        "no martingale coupling exists (Strassen): the marginals are not in convex order");
  }
  if (sol.status != lp::Status::optimal) {
    throw NumericalError("weak transport LP did not reach optimality", sol.iterations);
  }
  std::vector<CouplingEntry> entries;
  for (std::size_t k = 0; k < n * m; ++k) {
    if (sol.x[k] > 1e-15) entries.push_back({k / m, k % m, sol.x[k]});
  }
  return {sol.objective, MartingaleCoupling(Coupling(d, mu.coords(), nu.coords(), std::move(entries)))};
}

}  // namespace martquant
