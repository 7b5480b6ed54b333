#include "martquant/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "martquant/errors.hpp"
#include "martquant/lp.hpp"

namespace martquant {

namespace {

constexpr double kMarginalTolerance = 1e-10;
constexpr double kDropWeight = 1e-15;

double norm(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double abs_pow(double r, double p) {
  if (p == 1.0) return r;
  if (p == 2.0) return r * r;
  return std::pow(r, p);
}

void require_same_dim(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.empty() || nu.empty()) throw InvalidInput("measures must be nonempty");
  if (mu.dim() != nu.dim()) throw InvalidInput("measures have different dimensions");
}

void require_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidInput("p must be a finite real >= 1");
}

// Couplings read off an LP solution over the full n×m grid of variables.
Coupling coupling_from_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const std::vector<double>& x) {
  const std::size_t m = nu.size();
  std::vector<CouplingEntry> entries;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] > kDropWeight) entries.push_back({k / m, k % m, x[k]});
  }
  Coupling c(mu.dim(), mu.coords(), nu.coords(), std::move(entries));
  const double res = c.marginal_residual(mu, nu);
  if (!(res <= kMarginalTolerance)) {
    throw NumericalError("optimal plan misses its marginals by " + std::to_string(res), 0);
  }
  return c;
}

void require_mean_match(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const auto a = mu.mean();
  const auto b = nu.mean();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k] - b[k]) > kMeanTolerance) {
      throw InfeasibleError(
          "no martingale coupling exists (Strassen): the marginals have different means");
    }
  }
}

// Rows: n source masses, m-1 target masses (the last one is implied), n·d barycenter rows.
lp::LinearProgram martingale_program(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                     std::span<const double> cost) {
  const std::size_t n = mu.size(), m = nu.size(), d = mu.dim();
  lp::LinearProgram prog(n + (m - 1) + n * d);
  for (std::size_t i = 0; i < n; ++i) prog.set_rhs(i, mu.weight(i));
  for (std::size_t j = 0; j + 1 < m; ++j) prog.set_rhs(n + j, nu.weight(j));
  std::vector<std::pair<std::size_t, double>> col;
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = mu.point(i);
    for (std::size_t j = 0; j < m; ++j) {
      const auto yj = nu.point(j);
      col.clear();
      col.emplace_back(i, 1.0);
      if (j + 1 < m) col.emplace_back(n + j, 1.0);
      for (std::size_t k = 0; k < d; ++k) {
        const double delta = yj[k] - xi[k];
        if (delta != 0.0) col.emplace_back(n + (m - 1) + i * d + k, delta);
      }
      prog.add_variable(cost.empty() ? 0.0 : cost[i * m + j], col);
    }
  }
  return prog;
}

}  // namespace

// ---------------------------------------------------------------------------
// Coupling

Coupling::Coupling(std::size_t dim, std::span<const double> src_coords,
                   std::span<const double> dst_coords, std::vector<CouplingEntry> entries) {
  if (dim == 0) throw InvalidInput("coupling dimension must be positive");
  if (src_coords.size() % dim != 0 || dst_coords.size() % dim != 0) {
    throw InvalidInput("coupling point arrays are not a multiple of the dimension");
  }
  const std::size_t n = src_coords.size() / dim, m = dst_coords.size() / dim;
  std::vector<double> row(n, 0.0), col(m, 0.0);
  for (const auto& e : entries) {
    if (e.i >= n || e.j >= m) throw InvalidInput("coupling entry index out of range");
    if (!std::isfinite(e.w) || e.w < 0.0) throw InvalidInput("coupling weights must be >= 0");
    row[e.i] += e.w;
    col[e.j] += e.w;
  }
  // Unused points get zero mass and vanish from the marginals.
  source_ = DiscreteMeasure(dim, {src_coords.begin(), src_coords.end()}, row);
  target_ = DiscreteMeasure(dim, {dst_coords.begin(), dst_coords.end()}, col);

  std::vector<std::size_t> src_map(n), dst_map(m);
  for (std::size_t i = 0; i < n; ++i) src_map[i] = source_.find(src_coords.subspan(i * dim, dim));
  for (std::size_t j = 0; j < m; ++j) dst_map[j] = target_.find(dst_coords.subspan(j * dim, dim));

  // The marginals were renormalized; apply the same factor to the entries.
  const double total = std::accumulate(row.begin(), row.end(), 0.0);
  std::vector<CouplingEntry> mapped;
  mapped.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.w > 0.0) mapped.push_back({src_map[e.i], dst_map[e.j], e.w / total});
  }
  std::sort(mapped.begin(), mapped.end(), [](const CouplingEntry& a, const CouplingEntry& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  for (const auto& e : mapped) {
    if (!entries_.empty() && entries_.back().i == e.i && entries_.back().j == e.j) {
      entries_.back().w += e.w;
    } else {
      entries_.push_back(e);
    }
  }
  row_start_.assign(source_.size() + 1, 0);
  for (const auto& e : entries_) ++row_start_[e.i + 1];
  for (std::size_t i = 0; i < source_.size(); ++i) row_start_[i + 1] += row_start_[i];
}

DiscreteMeasure Coupling::kernel(std::size_t i) const {
  const auto r = row(i);
  const std::size_t d = dim();
  std::vector<double> coords, weights;
  coords.reserve(r.size() * d);
  for (const auto& e : r) {
    const auto y = target_.point(e.j);
    coords.insert(coords.end(), y.begin(), y.end());
    weights.push_back(e.w);
  }
  return DiscreteMeasure::from_unnormalized(d, std::move(coords), std::move(weights));
}

double Coupling::marginal_residual(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (mu.dim() != dim() || nu.dim() != dim()) return inf;
  std::vector<double> row(mu.size(), 0.0), col(nu.size(), 0.0);
  for (const auto& e : entries_) {
    const std::size_t i = mu.find(source_.point(e.i));
    const std::size_t j = nu.find(target_.point(e.j));
    if (i == mu.size() || j == nu.size()) return inf;
    row[i] += e.w;
    col[j] += e.w;
  }
  double res = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) res = std::max(res, std::abs(row[i] - mu.weight(i)));
  for (std::size_t j = 0; j < nu.size(); ++j) res = std::max(res, std::abs(col[j] - nu.weight(j)));
  return res;
}

double Coupling::martingale_residual() const {
  const std::size_t d = dim();
  double worst = 0.0;
  std::vector<double> drift(d);
  for (std::size_t i = 0; i < source_.size(); ++i) {
    std::fill(drift.begin(), drift.end(), 0.0);
    const auto x = source_.point(i);
    for (const auto& e : row(i)) {
      const auto y = target_.point(e.j);
      for (std::size_t k = 0; k < d; ++k) drift[k] += e.w * (y[k] - x[k]);
    }
    double dn = 0.0, xn = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      dn += drift[k] * drift[k];
      xn += x[k] * x[k];
    }
    worst = std::max(worst, std::sqrt(dn) / (1.0 + std::sqrt(xn)));
  }
  return worst;
}

DiscreteMeasure Coupling::as_joint_measure() const {
  const std::size_t d = dim();
  std::vector<double> coords, weights;
  coords.reserve(entries_.size() * 2 * d);
  for (const auto& e : entries_) {
    const auto x = source_.point(e.i);
    const auto y = target_.point(e.j);
    coords.insert(coords.end(), x.begin(), x.end());
    coords.insert(coords.end(), y.begin(), y.end());
    weights.push_back(e.w);
  }
  return DiscreteMeasure::from_unnormalized(2 * d, std::move(coords), std::move(weights));
}

MartingaleCoupling::MartingaleCoupling(Coupling c) : c_(std::move(c)) {
  const double res = c_.martingale_residual();
  if (!(res <= kTolerance)) {
    throw InvalidInput("coupling violates the martingale constraint (residual " +
                       std::to_string(res) + ")");
  }
}

// ---------------------------------------------------------------------------
// CostSpec

CostSpec CostSpec::abs_power(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw InvalidInput("abs_power exponent must be positive");
  CostSpec c;
  c.kind = Kind::abs_power;
  c.p = p;
  return c;
}

CostSpec CostSpec::forward_call(double strike) {
  CostSpec c;
  c.kind = Kind::forward_call;
  c.strike = strike;
  return c;
}

CostSpec CostSpec::forward_put(double strike) {
  CostSpec c;
  c.kind = Kind::forward_put;
  c.strike = strike;
  return c;
}

CostSpec CostSpec::scalar_product() {
  CostSpec c;
  c.kind = Kind::scalar_product;
  return c;
}

CostSpec CostSpec::matrix(std::vector<std::vector<double>> values) {
  CostSpec c;
  c.kind = Kind::matrix;
  c.values = std::move(values);
  return c;
}

double CostSpec::operator()(std::span<const double> x, std::span<const double> y) const {
  switch (kind) {
    case Kind::abs_power:
      return abs_pow(norm(x, y), p);
    case Kind::forward_call:
    case Kind::forward_put: {
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) s += y[k] - x[k];
      return kind == Kind::forward_call ? std::max(s - strike, 0.0) : std::max(strike - s, 0.0);
    }
    case Kind::scalar_product: {
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
      return s;
    }
    case Kind::matrix:
      break;
  }
  throw InvalidInput("a tabulated cost cannot be evaluated at arbitrary points");
}

std::vector<double> CostSpec::tabulate(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const {
  const std::size_t n = mu.size(), m = nu.size();
  std::vector<double> table(n * m);
  if (kind == Kind::matrix) {
    if (values.size() != n) throw InvalidInput("cost matrix row count does not match |supp mu|");
    for (std::size_t i = 0; i < n; ++i) {
      if (values[i].size() != m) {
        throw InvalidInput("cost matrix column count does not match |supp nu|");
      }
      for (std::size_t j = 0; j < m; ++j) {
        if (!std::isfinite(values[i][j])) throw InvalidInput("cost matrix entries must be finite");
        table[i * m + j] = values[i][j];
      }
    }
    return table;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) table[i * m + j] = (*this)(mu.point(i), nu.point(j));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Distances

namespace {

TransportResult comonotone(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  const std::size_t n = mu.size(), m = nu.size();
  std::vector<double> f(n), g(m);
  std::partial_sum(mu.weights().begin(), mu.weights().end(), f.begin());
  std::partial_sum(nu.weights().begin(), nu.weights().end(), g.begin());
  f.back() = 1.0;
  g.back() = 1.0;

  std::vector<CouplingEntry> entries;
  double value = 0.0, prev = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    const double cur = std::min(f[i], g[j]);
    const double w = cur - prev;
    if (w > 0.0) {
      entries.push_back({i, j, w});
      value += w * abs_pow(std::abs(mu.x(i) - nu.x(j)), p);
      prev = cur;
    }
    const bool adv_i = f[i] <= cur, adv_j = g[j] <= cur;
    if (adv_i) ++i;
    if (adv_j) ++j;
  }
  Coupling c(1, mu.coords(), nu.coords(), std::move(entries));
  return {value, std::move(c)};
}

}  // namespace

TransportResult transport_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             std::span<const double> cost) {
  require_same_dim(mu, nu);
  const std::size_t n = mu.size(), m = nu.size();
  if (cost.size() != n * m) throw InvalidInput("cost table has the wrong size");
  lp::LinearProgram prog(n + m - 1);
  for (std::size_t i = 0; i < n; ++i) prog.set_rhs(i, mu.weight(i));
  for (std::size_t j = 0; j + 1 < m; ++j) prog.set_rhs(n + j, nu.weight(j));
  std::vector<std::pair<std::size_t, double>> col;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      col.clear();
      col.emplace_back(i, 1.0);
      if (j + 1 < m) col.emplace_back(n + j, 1.0);
      prog.add_variable(cost[i * m + j], col);
    }
  }
  const auto sol = lp::solve(prog);
  if (sol.status != lp::Status::optimal) {
    throw NumericalError(std::string("transport LP returned ") + lp::to_string(sol.status),
                         sol.iterations);
  }
  return {sol.objective, coupling_from_plan(mu, nu, sol.x)};
}

TransportResult w_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                    TransportMethod method) {
  require_same_dim(mu, nu);
  require_p(p);
  if (mu.dim() == 1 && method == TransportMethod::automatic) return comonotone(mu, nu, p);
  CostSpec c = CostSpec::abs_power(p);
  return transport_lp(mu, nu, c.tabulate(mu, nu));
}

double w_p_semidiscrete_1d(const Analytic1DMeasure& mu, const DiscreteMeasure& nu, double p) {
  if (nu.empty() || nu.dim() != 1) throw InvalidInput("target must be a nonempty 1D measure");
  require_p(p);
  double value = 0.0, cum = 0.0;
  double lo = mu.lower();
  for (std::size_t j = 0; j < nu.size(); ++j) {
    cum += nu.weight(j);
    const double hi = (j + 1 == nu.size() || cum >= 1.0) ? mu.upper() : mu.quantile(cum);
    if (hi > lo) value += mu.abs_moment(nu.x(j), p, lo, hi);
    lo = hi;
  }
  return value;
}

MartingaleTransportResult mot_value_table(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                          std::span<const double> cost) {
  require_same_dim(mu, nu);
  if (cost.size() != mu.size() * nu.size()) throw InvalidInput("cost table has the wrong size");
  require_mean_match(mu, nu);
  const auto sol = lp::solve(martingale_program(mu, nu, cost));
  if (sol.status == lp::Status::infeasible) {
    throw InfeasibleError(
        "no martingale coupling exists (Strassen): the marginals are not in convex order");
  }
  if (sol.status != lp::Status::optimal) {
    throw NumericalError(std::string("martingale LP returned ") + lp::to_string(sol.status),
                         sol.iterations);
  }
  return {sol.objective, MartingaleCoupling(coupling_from_plan(mu, nu, sol.x))};
}

MartingaleTransportResult m_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  require_same_dim(mu, nu);
  require_p(p);
  return mot_value_table(mu, nu, CostSpec::abs_power(p).tabulate(mu, nu));
}

bool convex_order_feasible(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require_same_dim(mu, nu);
  const auto a = mu.mean();
  const auto b = nu.mean();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k] - b[k]) > kMeanTolerance) return false;
  }
  const auto sol = lp::solve(martingale_program(mu, nu, {}));
  return sol.status == lp::Status::optimal;
}

MartingaleTransportResult mot_value(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                    const CostSpec& cost, PriceBound bound) {
  require_same_dim(mu, nu);
  auto table = cost.tabulate(mu, nu);
  if (bound == PriceBound::lower) return mot_value_table(mu, nu, table);
  for (double& v : table) v = -v;
  auto r = mot_value_table(mu, nu, table);
  r.value = -r.value;
  return r;
}

}  // namespace martquant
