#include "martquant/dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "martquant/errors.hpp"
#include "martquant/lp.hpp"

namespace martquant {

namespace {

constexpr double kBarycenterTol = 1e-10;

double abs_pow(double r, double p) {
  if (p == 1.0) return r;
  if (p == 2.0) return r * r;
  return std::pow(r, p);
}

void require_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidInput("p must be a finite real >= 1");
}

bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// ∫_{[a,b]} (x − a) dμ and the cell mass.
struct CellMoments {
  double mass, first;
};

CellMoments cell_moments(const Analytic1DMeasure& mu, double a, double b) {
  const auto m = mu.shifted_moments(a, a, b, 1);
  return {m[0], m[1]};
}

// ∫_{[a,b]} ((a+b)x − ab) dμ: second moment of the split image of μ restricted to [a, b].
double cell_second_moment(const Analytic1DMeasure& mu, double a, double b) {
  if (!(b > a)) return 0.0;
  const auto m = mu.shifted_moments(a, a, b, 2);
  // (a+b)x − ab = x² − (x−a)(x−b) and (x−a)(x−b) = (x−a)² − h(x−a).
  const double h = b - a;
  const double x2 = mu.partial_moment(2, a, b);
  return x2 - (m[2] - h * m[1]);
}

double grid_objective(const Analytic1DMeasure& mu, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < y.size(); ++k) s += cell_second_moment(mu, y[k], y[k + 1]);
  return s;
}

// Derivative of the quadratic objective in interior coordinate i.
double coordinate_gradient(const Analytic1DMeasure& mu, const std::vector<double>& y, std::size_t i,
                           double yi) {
  const double a = y[i - 1], b = y[i + 1];
  const double left = cell_moments(mu, a, yi).first;
  const auto rm = cell_moments(mu, yi, b);
  // ∫_{[yi,b]} (b − x) dμ = (b − yi)·mass − ∫(x − yi)dμ.
  const double right = (b - yi) * rm.mass - rm.first;
  return left - right;
}

// Exact minimizer of the objective in coordinate i: the root of its monotone derivative.
double minimize_coordinate(const Analytic1DMeasure& mu, const std::vector<double>& y, std::size_t i) {
  double lo = y[i - 1], hi = y[i + 1];
  if (coordinate_gradient(mu, y, i, lo) >= 0.0) return lo;
  if (coordinate_gradient(mu, y, i, hi) <= 0.0) return hi;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (coordinate_gradient(mu, y, i, mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

bool strictly_increasing(const std::vector<double>& y) {
  for (std::size_t k = 1; k < y.size(); ++k) {
    if (!(y[k] > y[k - 1])) return false;
  }
  return true;
}

double max_abs_gradient(const Analytic1DMeasure& mu, const std::vector<double>& y) {
  double g = 0.0;
  for (std::size_t i = 1; i + 1 < y.size(); ++i)
    g = std::max(g, std::abs(coordinate_gradient(mu, y, i, y[i])));
  return g;
}

// Newton polish with the tridiagonal Hessian; keeps a step only when the gradient shrinks.
void newton_polish(const Analytic1DMeasure& mu, std::vector<double>& y) {
  const std::size_t n = y.size();
  if (n < 3) return;
  const std::size_t m = n - 2;
  double gnorm = max_abs_gradient(mu, y);
  for (int it = 0; it < 50 && gnorm > 0.0; ++it) {
    std::vector<double> sub(m, 0.0), diag(m), sup(m, 0.0), rhs(m);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = k + 1;
      rhs[k] = -coordinate_gradient(mu, y, i, y[i]);
      diag[k] = (y[i + 1] - y[i - 1]) * mu.density(y[i]);
      if (k > 0) sub[k] = -mu.partial_moment(0, y[i - 1], y[i]);
      if (k + 1 < m) sup[k] = -mu.partial_moment(0, y[i], y[i + 1]);
    }
    for (std::size_t k = 1; k < m; ++k) {
      const double f = sub[k] / diag[k - 1];
      diag[k] -= f * sup[k - 1];
      rhs[k] -= f * rhs[k - 1];
    }
    std::vector<double> delta(m);
    delta[m - 1] = rhs[m - 1] / diag[m - 1];
    for (std::size_t k = m - 1; k-- > 0;) delta[k] = (rhs[k] - sup[k] * delta[k + 1]) / diag[k];
    bool improved = false;
    for (double step = 1.0; step >= 1.0 / 32; step *= 0.5) {
      auto z = y;
      for (std::size_t k = 0; k < m; ++k) z[k + 1] += step * delta[k];
      if (!strictly_increasing(z) || !std::all_of(delta.begin(), delta.end(), [](double v) {
            return std::isfinite(v);
          }))
        continue;
      const double gz = max_abs_gradient(mu, z);
      if (gz < gnorm) {
        y = std::move(z);
        gnorm = gz;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
}

std::vector<std::vector<double>> starting_grids(const Analytic1DMeasure& mu, std::size_t n,
                                                const DualSearchOptions& opt) {
  const double lo = mu.lower(), hi = mu.upper();
  std::vector<std::vector<double>> starts;
  std::vector<double> q(n), u(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n - 1);
    u[k] = lo + (hi - lo) * t;
    q[k] = (k == 0) ? lo : (k + 1 == n) ? hi : mu.quantile(t);
  }
  starts.push_back(u);
  if (opt.starts > 1) starts.push_back(q);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (starts.size() < opt.starts) {
    std::vector<double> y(n);
    y[0] = lo;
    y[n - 1] = hi;
    for (std::size_t k = 1; k + 1 < n; ++k) y[k] = lo + (hi - lo) * (0.05 + 0.9 * unif(rng));
    std::sort(y.begin() + 1, y.end() - 1);
    if (strictly_increasing(y)) starts.push_back(std::move(y));
  }
  return starts;
}

// Keeps the best (objective, lexicographic grid) candidate.
void keep_best(std::vector<double>& best, double& best_obj, std::vector<double> y, double obj) {
  if (best.empty() || obj < best_obj || (obj == best_obj && y < best)) {
    best = std::move(y);
    best_obj = obj;
  }
}

// Golden-section minimization of a unimodal-ish function on [lo, hi].
template <class F>
double golden_section(F&& f, double lo, double hi, double xtol) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > xtol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

}  // namespace

// ---------------------------------------------------------------------------
// SplittingKernel

SplittingKernel::SplittingKernel(Quantizer grid, std::vector<double> sources, std::vector<Row> rows)
    : grid_(std::move(grid)) {
  const std::size_t d = grid_.dim();
  if (sources.size() != rows.size() * d) {
    throw InvalidInput("splitting kernel needs exactly one source point per row");
  }
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  auto src = [&](std::size_t r) { return std::span<const double>(sources.data() + r * d, d); };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lex_less(src(a), src(b)); });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (std::ranges::equal(src(order[k]), src(order[k - 1]))) {
      throw InvalidInput("splitting kernel has two rows for the same source point");
    }
  }
  sources_.reserve(sources.size());
  rows_.reserve(rows.size());
  std::vector<double> bary(d);
  for (std::size_t r : order) {
    Row row = std::move(rows[r]);
    if (row.cols.size() != row.w.size()) throw InvalidInput("kernel row has mismatched lengths");
    std::vector<std::size_t> idx(row.cols.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row.cols[a] < row.cols[b]; });
    Row clean;
    double total = 0.0;
    for (std::size_t k : idx) {
      if (row.cols[k] >= grid_.size()) throw InvalidInput("kernel column outside the grid");
      if (!std::isfinite(row.w[k]) || row.w[k] < 0.0) throw InvalidInput("kernel weights must be >= 0");
      if (row.w[k] == 0.0) continue;
      if (!clean.cols.empty() && clean.cols.back() == row.cols[k]) {
        clean.w.back() += row.w[k];
      } else {
        clean.cols.push_back(row.cols[k]);
        clean.w.push_back(row.w[k]);
      }
      total += row.w[k];
    }
    if (std::abs(total - 1.0) > tol::kMassInput) throw InvalidInput("kernel row does not sum to 1");
    for (double& w : clean.w) w /= total;
    std::fill(bary.begin(), bary.end(), 0.0);
    for (std::size_t k = 0; k < clean.cols.size(); ++k) {
      const auto g = grid_.point(clean.cols[k]);
      for (std::size_t t = 0; t < d; ++t) bary[t] += clean.w[k] * g[t];
    }
    const auto x = src(r);
    for (std::size_t t = 0; t < d; ++t) {
      if (std::abs(bary[t] - x[t]) > kBarycenterTol * std::max(1.0, std::abs(x[t]))) {
        throw InvalidInput("kernel row barycenter differs from its source point");
      }
    }
    sources_.insert(sources_.end(), x.begin(), x.end());
    rows_.push_back(std::move(clean));
  }
}

std::size_t SplittingKernel::find_row(std::span<const double> x) const {
  std::size_t lo = 0, hi = rows_.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (lex_less(source(mid), x)) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo < rows_.size() && std::ranges::equal(source(lo), x) ? lo : rows_.size();
}

std::vector<double> SplittingKernel::grid_weights(const DiscreteMeasure& mu) const {
  if (mu.dim() != grid_.dim()) throw InvalidInput("kernel and measure dimensions differ");
  std::vector<double> w(grid_.size(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const std::size_t r = find_row(mu.point(i));
    if (r == rows_.size()) throw InvalidInput("kernel has no row for an atom of the measure");
    for (std::size_t k = 0; k < rows_[r].cols.size(); ++k) w[rows_[r].cols[k]] += mu.weight(i) * rows_[r].w[k];
  }
  return w;
}

double SplittingKernel::cost(const DiscreteMeasure& mu, double p) const {
  require_p(p);
  const std::size_t d = grid_.dim();
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const std::size_t r = find_row(mu.point(i));
    if (r == rows_.size()) throw InvalidInput("kernel has no row for an atom of the measure");
    const auto x = mu.point(i);
    double row_cost = 0.0;
    for (std::size_t k = 0; k < rows_[r].cols.size(); ++k) {
      const auto g = grid_.point(rows_[r].cols[k]);
      double d2 = 0.0;
      for (std::size_t t = 0; t < d; ++t) d2 += (g[t] - x[t]) * (g[t] - x[t]);
      row_cost += rows_[r].w[k] * abs_pow(std::sqrt(d2), p);
    }
    s += mu.weight(i) * row_cost;
  }
  return s;
}

// ---------------------------------------------------------------------------
// 1D splitting

Split split_1d(const Quantizer& grid, double x) {
  if (grid.dim() != 1) throw InvalidInput("split_1d needs a 1D grid");
  const std::size_t n = grid.size();
  if (!(x >= grid.x(0) && x <= grid.x(n - 1))) {
    throw InvalidInput("point " + std::to_string(x) + " lies outside the grid hull");
  }
  const auto& c = grid.coords();
  const std::size_t hi = static_cast<std::size_t>(std::lower_bound(c.begin(), c.end(), x) - c.begin());
  if (c[hi] == x) return {hi, hi, 1.0, 0.0};
  const std::size_t lo = hi - 1;
  const double h = c[hi] - c[lo];
  return {lo, hi, (c[hi] - x) / h, (x - c[lo]) / h};
}

DualQuantization dual_quantize_1d(const DiscreteMeasure& mu, const Quantizer& grid, double p) {
  require_p(p);
  if (mu.dim() != 1 || grid.dim() != 1) throw InvalidInput("dual_quantize_1d needs 1D inputs");
  DualQuantization r;
  r.grid = grid;
  r.grid_weights.assign(grid.size(), 0.0);
  std::vector<SplittingKernel::Row> rows;
  rows.reserve(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double x = mu.x(i), w = mu.weight(i);
    const Split s = split_1d(grid, x);
    if (s.lo == s.hi) {
      r.grid_weights[s.lo] += w;
      rows.push_back({{s.lo}, {1.0}});
      continue;
    }
    r.grid_weights[s.lo] += w * s.w_lo;
    r.grid_weights[s.hi] += w * s.w_hi;
    r.distortion_p += w * (s.w_lo * abs_pow(x - grid.x(s.lo), p) + s.w_hi * abs_pow(grid.x(s.hi) - x, p));
    rows.push_back({{s.lo, s.hi}, {s.w_lo, s.w_hi}});
  }
  r.pushforward = DiscreteMeasure::from_unnormalized(1, grid.coords(), r.grid_weights);
  r.kernel = SplittingKernel(grid, mu.coords(), std::move(rows));
  return r;
}

double dual_cell_cost(const Analytic1DMeasure& mu, double a, double b, double p) {
  require_p(p);
  if (!(b > a)) return 0.0;
  const double h = b - a;
  // (b−x)/h·|x−a|^p = |x−a|^p − |x−a|^{p+1}/h on [a, b]; symmetrically at b.
  const double left = mu.abs_moment(a, p, a, b) - mu.abs_moment(a, p + 1.0, a, b) / h;
  const double right = mu.abs_moment(b, p, a, b) - mu.abs_moment(b, p + 1.0, a, b) / h;
  return left + right;
}

DualQuantization dual_quantize_1d(const Analytic1DMeasure& mu, const Quantizer& grid, double p) {
  require_p(p);
  if (grid.dim() != 1) throw InvalidInput("dual_quantize_1d needs a 1D grid");
  const std::size_t n = grid.size();
  if (grid.x(0) > mu.lower() || grid.x(n - 1) < mu.upper()) {
    throw InvalidInput("the support of the measure is not inside the grid hull");
  }
  DualQuantization r;
  r.grid = grid;
  r.grid_weights.assign(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double a = grid.x(k), b = grid.x(k + 1);
    if (b <= mu.lower() || a >= mu.upper()) continue;
    const auto m = cell_moments(mu, a, b);
    const double to_b = m.first / (b - a);
    r.grid_weights[k] += m.mass - to_b;
    r.grid_weights[k + 1] += to_b;
    r.distortion_p += dual_cell_cost(mu, a, b, p);
  }
  r.pushforward = DiscreteMeasure::from_unnormalized(1, grid.coords(), r.grid_weights);
  return r;
}

// ---------------------------------------------------------------------------
// Optimal quadratic dual grids

DualQuantization optimal_dual_1d_quadratic(const DiscreteMeasure& mu, std::size_t n,
                                           std::optional<std::pair<double, double>> support) {
  if (n < 2) throw InvalidInput("a dual grid needs at least 2 points");
  if (mu.empty() || mu.dim() != 1) throw InvalidInput("optimal_dual_1d_quadratic needs a 1D measure");
  double lo = mu.x(0), hi = mu.x(mu.size() - 1);
  if (support) {
    if (support->first > lo || support->second < hi) {
      throw InvalidInput("declared support does not contain the atoms");
    }
    lo = support->first;
    hi = support->second;
  }
  if (!(hi > lo)) {
    throw InvalidInput("a dual grid needs a nondegenerate support; declare one for a Dirac mass");
  }
  // Candidates: atoms plus the pinned endpoints, with their masses.
  std::vector<double> z, w;
  if (lo < mu.x(0)) {
    z.push_back(lo);
    w.push_back(0.0);
  }
  for (std::size_t i = 0; i < mu.size(); ++i) {
    z.push_back(mu.x(i));
    w.push_back(mu.weight(i));
  }
  if (hi > mu.x(mu.size() - 1)) {
    z.push_back(hi);
    w.push_back(0.0);
  }
  const std::size_t m = z.size();

  if (m <= n) {
    // Every candidate becomes a grid point; pad with midpoints of the widest gaps.
    std::vector<double> g = z;
    while (g.size() < n) {
      std::size_t best = 0;
      for (std::size_t k = 1; k + 1 < g.size(); ++k) {
        if (g[k + 1] - g[k] > g[best + 1] - g[best]) best = k;
      }
      g.insert(g.begin() + static_cast<std::ptrdiff_t>(best) + 1, 0.5 * (g[best] + g[best + 1]));
    }
    return dual_quantize_1d(mu, Quantizer::from_1d(std::move(g)), 2.0);
  }

  // Prefix sums over candidates; cell (i, j] carries atoms i+1..j, the first cell also atom 0.
  std::vector<double> pw(m + 1, 0.0), ps(m + 1, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    pw[k + 1] = pw[k] + w[k];
    ps[k + 1] = ps[k] + w[k] * z[k];
  }
  auto cell = [&](std::size_t i, std::size_t j) {
    const double W = pw[j + 1] - pw[i + 1], S = ps[j + 1] - ps[i + 1];
    return (z[i] + z[j]) * S - z[i] * z[j] * W;
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t layers = n - 1;  // cells
  // f[l][j]: best cost of l cells ending at candidate j; parent for reconstruction.
  std::vector<std::vector<double>> f(layers + 1, std::vector<double>(m, inf));
  std::vector<std::vector<std::size_t>> parent(layers + 1, std::vector<std::size_t>(m, 0));
  f[0][0] = w[0] * z[0] * z[0];
  for (std::size_t l = 1; l <= layers; ++l) {
    const std::size_t jmin = l, jmax = (l == layers) ? m - 1 : m - 1 - (layers - l);
    for (std::size_t j = jmin; j <= jmax; ++j) {
      if (l == layers && j != m - 1) continue;
      double best = inf;
      std::size_t arg = 0;
      for (std::size_t i = l - 1; i < j; ++i) {
        if (f[l - 1][i] == inf) continue;
        const double v = f[l - 1][i] + cell(i, j);
        if (v < best) {
          best = v;
          arg = i;
        }
      }
      f[l][j] = best;
      parent[l][j] = arg;
    }
  }
  std::vector<double> g(n);
  std::size_t j = m - 1;
  for (std::size_t l = layers; l > 0; --l) {
    g[l] = z[j];
    j = parent[l][j];
  }
  g[0] = z[0];
  return dual_quantize_1d(mu, Quantizer::from_1d(std::move(g)), 2.0);
}

DualQuantization optimal_dual_1d_quadratic(const Analytic1DMeasure& mu, std::size_t n,
                                           const DualSearchOptions& opt) {
  if (n < 2) throw InvalidInput("a dual grid needs at least 2 points");
  if (opt.starts == 0) throw InvalidInput("at least one start is required");
  if (n == 2) return dual_quantize_1d(mu, Quantizer::from_1d({mu.lower(), mu.upper()}), 2.0);

  std::vector<double> best;
  double best_obj = 0.0;
  for (auto y : starting_grids(mu, n, opt)) {
    double obj = grid_objective(mu, y);
    std::size_t sweep = 0;
    for (; sweep < opt.max_sweeps; ++sweep) {
      for (std::size_t i = 1; i + 1 < n; ++i) y[i] = minimize_coordinate(mu, y, i);
      const double next = grid_objective(mu, y);
      const double change = obj - next;
      obj = next;
      // Newton takes over once the sweeps have settled into the basin.
      if (change <= std::max(opt.tol * 1e-3, 1e-6 * obj)) break;
    }
    if (!strictly_increasing(y)) continue;  // collapsed start
    newton_polish(mu, y);
    keep_best(best, best_obj, y, grid_objective(mu, y));
  }
  if (best.empty()) throw ConvergenceError("dual grid search collapsed from every start", opt.max_sweeps);
  return dual_quantize_1d(mu, Quantizer::from_1d(std::move(best)), 2.0);
}

DualQuantization optimal_dual_1d(const Analytic1DMeasure& mu, std::size_t n, double p,
                                 const DualSearchOptions& opt) {
  require_p(p);
  if (n < 2) throw InvalidInput("a dual grid needs at least 2 points");
  if (opt.starts == 0) throw InvalidInput("at least one start is required");
  if (n == 2) return dual_quantize_1d(mu, Quantizer::from_1d({mu.lower(), mu.upper()}), p);

  auto total = [&](const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < y.size(); ++k) s += dual_cell_cost(mu, y[k], y[k + 1], p);
    return s;
  };
  std::vector<double> best;
  double best_obj = 0.0;
  for (auto y : starting_grids(mu, n, opt)) {
    double obj = total(y);
    for (std::size_t sweep = 0; sweep < opt.max_sweeps; ++sweep) {
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const double a = y[i - 1], b = y[i + 1];
        auto local = [&](double t) {
          return dual_cell_cost(mu, a, t, p) + dual_cell_cost(mu, t, b, p);
        };
        y[i] = golden_section(local, a, b, 1e-11 * (b - a + 1.0));
      }
      const double next = total(y);
      const double change = obj - next;
      obj = next;
      if (change <= opt.tol * 1e-3) break;
    }
    if (!strictly_increasing(y)) continue;
    keep_best(best, best_obj, y, obj);
  }
  if (best.empty()) throw ConvergenceError("dual grid search collapsed from every start", opt.max_sweeps);
  return dual_quantize_1d(mu, Quantizer::from_1d(std::move(best)), p);
}

// ---------------------------------------------------------------------------
// Dual distortion through linear programming

std::pair<double, SplittingKernel> dual_distortion_lp(const DiscreteMeasure& mu,
                                                      const Quantizer& grid, double p) {
  require_p(p);
  if (mu.empty()) throw InvalidInput("measure must be nonempty");
  if (mu.dim() != grid.dim()) throw InvalidInput("grid and measure dimensions differ");
  const std::size_t d = mu.dim(), g = grid.size();
  double value = 0.0;
  std::vector<SplittingKernel::Row> rows;
  rows.reserve(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto x = mu.point(i);
    // Rows: unit mass, then d barycenter rows Σ_γ q_γ (γ − x) = 0.
    lp::LinearProgram prog(1 + d);
    prog.set_rhs(0, 1.0);
    std::vector<std::pair<std::size_t, double>> col;
    for (std::size_t k = 0; k < g; ++k) {
      const auto y = grid.point(k);
      col.assign(1, {0, 1.0});
      double d2 = 0.0;
      for (std::size_t t = 0; t < d; ++t) {
        const double delta = y[t] - x[t];
        d2 += delta * delta;
        if (delta != 0.0) col.emplace_back(1 + t, delta);
      }
      prog.add_variable(abs_pow(std::sqrt(d2), p), col);
    }
    const auto sol = lp::solve(prog);
    if (sol.status == lp::Status::infeasible) {
      throw InvalidInput("an atom of the measure lies outside the convex hull of the grid");
    }
    if (sol.status != lp::Status::optimal) {
      throw NumericalError("dual distortion LP did not reach optimality", sol.iterations);
    }
    SplittingKernel::Row row;
    for (std::size_t k = 0; k < g; ++k) {
      if (sol.x[k] > 1e-15) {
        row.cols.push_back(k);
        row.w.push_back(sol.x[k]);
      }
    }
    value += mu.weight(i) * sol.objective;
    rows.push_back(std::move(row));
  }
  return {value, SplittingKernel(grid, mu.coords(), std::move(rows))};
}

}  // namespace martquant
