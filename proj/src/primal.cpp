#include "martquant/primal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "martquant/errors.hpp"

namespace martquant {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

double pow_dist(std::span<const double> a, std::span<const double> b, double p) {
  const double s = sq_dist(a, b);
  if (p == 2.0) return s;
  return std::pow(std::sqrt(s), p);
}

void require_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidInput("p must be a finite real >= 1");
}

void require_dims(const DiscreteMeasure& mu, const Quantizer& grid) {
  if (grid.size() == 0) throw InvalidInput("grid must be nonempty");
  if (mu.empty()) throw InvalidInput("measure must be nonempty");
  if (mu.dim() != grid.dim()) throw InvalidInput("grid and measure dimensions differ");
}

// Voronoi boundaries of a 1D grid clipped to the support of an analytic law:
// cell k is [b[k], b[k+1]].
std::vector<double> analytic_cells(const Analytic1DMeasure& mu, const Quantizer& grid) {
  if (grid.dim() != 1 || grid.size() == 0) throw InvalidInput("analytic inputs need a 1D grid");
  const std::size_t n = grid.size();
  std::vector<double> b(n + 1);
  b[0] = mu.lower();
  b[n] = mu.upper();
  for (std::size_t k = 1; k < n; ++k) {
    b[k] = std::clamp(0.5 * (grid.x(k - 1) + grid.x(k)), mu.lower(), mu.upper());
  }
  return b;
}

// Prefix sums of mass and first moment over sorted 1D atoms.
struct Prefix1D {
  std::vector<double> w{0.0}, s{0.0};
  explicit Prefix1D(const DiscreteMeasure& mu) {
    for (std::size_t i = 0; i < mu.size(); ++i) {
      w.push_back(w.back() + mu.weight(i));
      s.push_back(s.back() + mu.weight(i) * mu.x(i));
    }
  }
};

// First atom index strictly right of the Voronoi boundary between g[k] and g[k+1].
std::size_t cell_end(const DiscreteMeasure& mu, const std::vector<double>& g, std::size_t k) {
  const double mid = 0.5 * (g[k] + g[k + 1]);
  const auto& c = mu.coords();
  return static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), mid) - c.begin());
}

// Initial 1D grid: conditional means of the quantile function over [k/n, (k+1)/n].
std::vector<double> quantile_cell_means(const DiscreteMeasure& mu, std::size_t n) {
  const Prefix1D pre(mu);
  auto qint = [&](double u) {  // ∫_0^u F^{-1}
    if (u >= 1.0) return pre.s.back();
    const auto it = std::upper_bound(pre.w.begin() + 1, pre.w.end(), u);
    const std::size_t i = static_cast<std::size_t>(it - pre.w.begin()) - 1;
    if (i >= mu.size()) return pre.s.back();
    return pre.s[i] + (u - pre.w[i]) * mu.x(i);
  };
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u0 = static_cast<double>(k) / n, u1 = static_cast<double>(k + 1) / n;
    g[k] = (qint(u1) - qint(u0)) * static_cast<double>(n);
  }
  return g;
}

// k-means++ seeding weighted by μ.
std::vector<double> seed_plus_plus(const DiscreteMeasure& mu, std::size_t n, std::uint64_t seed) {
  const std::size_t m = mu.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](const std::vector<double>& score) {
    const double total = std::accumulate(score.begin(), score.end(), 0.0);
    double u = unif(rng) * total;
    for (std::size_t i = 0; i < m; ++i) {
      if (score[i] <= 0.0) continue;
      u -= score[i];
      if (u <= 0.0) return i;
    }
    for (std::size_t i = m; i-- > 0;) {
      if (score[i] > 0.0) return i;
    }
    return std::size_t{0};
  };
  std::vector<double> g;
  std::vector<double> d2(m, std::numeric_limits<double>::infinity());
  std::size_t pick = draw(mu.weights());
  for (std::size_t c = 0; c < n; ++c) {
    const auto x = mu.point(pick);
    g.insert(g.end(), x.begin(), x.end());
    std::vector<double> score(m);
    for (std::size_t i = 0; i < m; ++i) {
      d2[i] = std::min(d2[i], sq_dist(mu.point(i), x));
      score[i] = mu.weight(i) * d2[i];
    }
    if (c + 1 < n) pick = draw(score);
  }
  return g;
}

struct Assignment {
  std::vector<std::size_t> cell;  // per atom
  std::vector<double> mass;       // per grid point
  std::vector<double> sum;        // per grid point, d entries each
};

Assignment assign(const DiscreteMeasure& mu, const Quantizer& grid) {
  const std::size_t d = mu.dim(), n = grid.size();
  Assignment a{std::vector<std::size_t>(mu.size()), std::vector<double>(n, 0.0),
               std::vector<double>(n * d, 0.0)};
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const std::size_t k = project(grid, mu.point(i));
    a.cell[i] = k;
    a.mass[k] += mu.weight(i);
    const auto x = mu.point(i);
    for (std::size_t t = 0; t < d; ++t) a.sum[k * d + t] += mu.weight(i) * x[t];
  }
  return a;
}

// Moves the first empty cell's point onto the atom with the largest weighted
// squared distance to its representative. Returns false when no cell is empty.
bool reseed_one(const DiscreteMeasure& mu, std::vector<double>& g, std::size_t d) {
  const Quantizer grid(d, g);
  if (d == 1) g = grid.coords();  // keep the working copy sorted like the grid
  const auto a = assign(mu, grid);
  const auto empty = std::find(a.mass.begin(), a.mass.end(), 0.0);
  if (empty == a.mass.end()) return false;
  std::size_t worst = 0;
  double worst_cost = -1.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double c = mu.weight(i) * sq_dist(mu.point(i), grid.point(a.cell[i]));
    if (c > worst_cost) {
      worst_cost = c;
      worst = i;
    }
  }
  const std::size_t k = static_cast<std::size_t>(empty - a.mass.begin());
  const auto x = mu.point(worst);
  std::copy(x.begin(), x.end(), g.begin() + static_cast<std::ptrdiff_t>(k * d));
  return true;
}

// Removes duplicate points from a working grid by nudging them onto far atoms.
void make_distinct(const DiscreteMeasure& mu, std::vector<double>& g, std::size_t d) {
  const std::size_t n = g.size() / d;
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t l = 0; l < k; ++l) {
      if (!std::equal(g.begin() + k * d, g.begin() + (k + 1) * d, g.begin() + l * d)) continue;
      // Pick the atom farthest from every current point that is not already a point.
      std::size_t best = 0;
      double best_d = -1.0;
      for (std::size_t i = 0; i < mu.size(); ++i) {
        double dm = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
          dm = std::min(dm, sq_dist(mu.point(i), {g.data() + t * d, d}));
        }
        if (mu.weight(i) * dm > best_d) {
          best_d = mu.weight(i) * dm;
          best = i;
        }
      }
      const auto x = mu.point(best);
      std::copy(x.begin(), x.end(), g.begin() + static_cast<std::ptrdiff_t>(k * d));
      break;
    }
  }
}

// One Lloyd map T(x) on an analytic law: cell means under midpoint boundaries.
struct AnalyticStep {
  std::vector<double> t, mass, bounds;
};

AnalyticStep analytic_step(const Analytic1DMeasure& mu, const std::vector<double>& x) {
  AnalyticStep s;
  const std::size_t n = x.size();
  s.bounds.resize(n + 1);
  s.bounds[0] = mu.lower();
  s.bounds[n] = mu.upper();
  for (std::size_t k = 1; k < n; ++k) s.bounds[k] = 0.5 * (x[k - 1] + x[k]);
  s.t.resize(n);
  s.mass.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double lo = s.bounds[k], hi = s.bounds[k + 1];
    s.mass[k] = mu.partial_moment(0, lo, hi);
    s.t[k] = s.mass[k] > 0.0 ? mu.partial_moment(1, lo, hi) / s.mass[k] : 0.5 * (lo + hi);
  }
  return s;
}

double max_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) r = std::max(r, std::abs(a[k] - b[k]));
  return r;
}

// Newton step on G(x) = x − T(x) with the tridiagonal Jacobian of the Lloyd map.
std::vector<double> newton_step(const Analytic1DMeasure& mu, const std::vector<double>& x,
                                const AnalyticStep& s) {
  const std::size_t n = x.size();
  std::vector<double> lower(n, 0.0), diag(n, 1.0), upper(n, 0.0), rhs(n);
  for (std::size_t k = 0; k < n; ++k) {
    rhs[k] = -(x[k] - s.t[k]);
    if (s.mass[k] <= 0.0) continue;
    const double m0 = s.mass[k];
    if (k >= 1) {
      const double b = s.bounds[k];
      const double dtdb = mu.density(b) * (s.t[k] - b) / m0;
      lower[k] -= 0.5 * dtdb;
      diag[k] -= 0.5 * dtdb;
    }
    if (k + 1 < n) {
      const double b = s.bounds[k + 1];
      const double dtdb = mu.density(b) * (b - s.t[k]) / m0;
      upper[k] -= 0.5 * dtdb;
      diag[k] -= 0.5 * dtdb;
    }
  }
  // Thomas algorithm.
  for (std::size_t k = 1; k < n; ++k) {
    const double f = lower[k] / diag[k - 1];
    diag[k] -= f * upper[k - 1];
    rhs[k] -= f * rhs[k - 1];
  }
  std::vector<double> delta(n);
  delta[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) delta[k] = (rhs[k] - upper[k] * delta[k + 1]) / diag[k];
  return delta;
}

bool strictly_inside(const Analytic1DMeasure& mu, const std::vector<double>& x) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > mu.lower() && x[k] < mu.upper())) return false;
    if (k > 0 && !(x[k] > x[k - 1])) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------

Quantizer::Quantizer(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) throw InvalidInput("grid dimension must be positive");
  if (coords_.empty() || coords_.size() % dim_ != 0) {
    throw InvalidInput("grid must hold a positive whole number of points");
  }
  for (double c : coords_) {
    if (!std::isfinite(c)) throw InvalidInput("grid coordinates must be finite");
  }
  const std::size_t n = size();
  if (dim_ == 1) {
    std::sort(coords_.begin(), coords_.end());
    for (std::size_t k = 1; k < n; ++k) {
      if (coords_[k] == coords_[k - 1]) throw InvalidInput("grid points must be distinct");
    }
    return;
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(point(a).begin(), point(a).end(), point(b).begin(),
                                        point(b).end());
  });
  for (std::size_t k = 1; k < n; ++k) {
    if (std::ranges::equal(point(idx[k]), point(idx[k - 1]))) {
      throw InvalidInput("grid points must be distinct");
    }
  }
}

Quantizer Quantizer::from_1d(std::vector<double> points) { return Quantizer(1, std::move(points)); }

std::size_t project(const Quantizer& grid, double x) {
  // First k with x <= midpoint(k, k+1); the midpoint itself goes to k.
  std::size_t lo = 0, hi = grid.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (x <= 0.5 * (grid.x(mid) + grid.x(mid + 1))) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

std::size_t project(const Quantizer& grid, std::span<const double> x) {
  if (x.size() != grid.dim()) throw InvalidInput("point and grid dimensions differ");
  if (grid.dim() == 1) return project(grid, x[0]);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double dk = sq_dist(x, grid.point(k));
    if (dk < best_d) {
      best_d = dk;
      best = k;
    }
  }
  return best;
}

double distortion(const DiscreteMeasure& mu, const Quantizer& grid, double p) {
  require_p(p);
  require_dims(mu, grid);
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    s += mu.weight(i) * pow_dist(mu.point(i), grid.point(project(grid, mu.point(i))), p);
  }
  return s;
}

double distortion(const Analytic1DMeasure& mu, const Quantizer& grid, double p) {
  require_p(p);
  const auto b = analytic_cells(mu, grid);
  double s = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (b[k + 1] > b[k]) s += mu.abs_moment(grid.x(k), p, b[k], b[k + 1]);
  }
  return s;
}

QuantizationResult quantize(const DiscreteMeasure& mu, const Quantizer& grid, double p) {
  require_p(p);
  require_dims(mu, grid);
  const std::size_t n = grid.size();
  QuantizationResult r;
  r.quantizer = grid;
  r.cell_weights.assign(n, 0.0);
  std::vector<CouplingEntry> entries;
  entries.reserve(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const std::size_t k = project(grid, mu.point(i));
    r.cell_weights[k] += mu.weight(i);
    r.distortion_p += mu.weight(i) * pow_dist(mu.point(i), grid.point(k), p);
    entries.push_back({k, i, mu.weight(i)});
  }
  r.pushforward = DiscreteMeasure(grid.dim(), grid.coords(), r.cell_weights);
  r.coupling = Coupling(grid.dim(), grid.coords(), mu.coords(), std::move(entries));
  return r;
}

QuantizationResult quantize(const Analytic1DMeasure& mu, const Quantizer& grid, double p) {
  require_p(p);
  const auto b = analytic_cells(mu, grid);
  QuantizationResult r;
  r.quantizer = grid;
  r.cell_weights.assign(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (b[k + 1] <= b[k]) continue;
    r.cell_weights[k] = mu.partial_moment(0, b[k], b[k + 1]);
    r.distortion_p += mu.abs_moment(grid.x(k), p, b[k], b[k + 1]);
  }
  r.pushforward = DiscreteMeasure::from_unnormalized(1, grid.coords(), r.cell_weights);
  return r;
}

double stationarity_residual(const DiscreteMeasure& mu, const Quantizer& grid) {
  require_dims(mu, grid);
  const std::size_t d = grid.dim();
  const auto a = assign(mu, grid);
  double r = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (a.mass[k] <= 0.0) continue;
    const auto g = grid.point(k);
    for (std::size_t t = 0; t < d; ++t) r = std::max(r, std::abs(a.sum[k * d + t] / a.mass[k] - g[t]));
  }
  return r;
}

double stationarity_residual(const Analytic1DMeasure& mu, const Quantizer& grid) {
  const auto b = analytic_cells(mu, grid);
  double r = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (b[k + 1] <= b[k]) continue;
    const double m0 = mu.partial_moment(0, b[k], b[k + 1]);
    if (m0 <= 0.0) continue;
    r = std::max(r, std::abs(mu.partial_moment(1, b[k], b[k + 1]) / m0 - grid.x(k)));
  }
  return r;
}

QuantizationResult lloyd(const DiscreteMeasure& mu, std::size_t n, const LloydOptions& opt) {
  if (n == 0) throw InvalidInput("N must be at least 1");
  if (mu.empty()) throw InvalidInput("measure must be nonempty");
  const std::size_t d = mu.dim();
  if (mu.size() <= n) return quantize(mu, Quantizer(d, mu.coords()));

  std::vector<double> g;
  if (opt.init) {
    if (opt.init->dim() != d || opt.init->size() != n) {
      throw InvalidInput("initial grid must have N points in the measure's dimension");
    }
    g = opt.init->coords();
  } else {
    g = d == 1 ? quantile_cell_means(mu, n) : seed_plus_plus(mu, n, opt.seed);
  }
  make_distinct(mu, g, d);

  std::size_t iter = 0;
  bool converged = false;
  while (iter < opt.max_iter) {
    ++iter;
    for (std::size_t guard = 0; guard < 10 * n && reseed_one(mu, g, d); ++guard) {
      make_distinct(mu, g, d);
    }
    const Quantizer grid(d, g);
    std::vector<double> next(n * d);
    if (d == 1) {
      const Prefix1D pre(mu);
      std::size_t begin = 0;
      const auto& cur = grid.coords();
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t end = k + 1 < n ? cell_end(mu, cur, k) : mu.size();
        const double mass = pre.w[end] - pre.w[begin];
        next[k] = mass > 0.0 ? (pre.s[end] - pre.s[begin]) / mass : cur[k];
        begin = end;
      }
      g = grid.coords();
    } else {
      const auto a = assign(mu, grid);
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t t = 0; t < d; ++t) next[k * d + t] = a.sum[k * d + t] / a.mass[k];
      }
    }
    const double disp = max_gap(next, g);
    g = std::move(next);
    if (disp <= opt.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceError("Lloyd iteration did not converge within " +
                               std::to_string(opt.max_iter) + " iterations",
                           iter, g);
  }
  auto r = quantize(mu, Quantizer(d, g));
  r.iterations = iter;
  return r;
}

QuantizationResult optimal_primal_1d(const Analytic1DMeasure& mu, std::size_t n, double tol) {
  if (n == 0) throw InvalidInput("N must be at least 1");
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = static_cast<double>(n) *
           mu.quantile_integral(static_cast<double>(k) / n, static_cast<double>(k + 1) / n);
  }
  constexpr std::size_t kMaxIter = 100000;
  std::size_t iter = 0;
  auto s = analytic_step(mu, x);
  double res = max_gap(x, s.t);
  // Lloyd until close, then Newton with step halving; fall back to Lloyd if Newton stalls.
  while (res > tol && iter < kMaxIter) {
    ++iter;
    bool accepted = false;
    if (res < 1e-3) {
      const auto delta = newton_step(mu, x, s);
      for (double step = 1.0; step >= 1.0 / 64; step *= 0.5) {
        std::vector<double> y(n);
        for (std::size_t k = 0; k < n; ++k) y[k] = x[k] + step * delta[k];
        if (!strictly_inside(mu, y)) continue;
        auto sy = analytic_step(mu, y);
        const double ry = max_gap(y, sy.t);
        if (ry < res) {
          x = std::move(y);
          s = std::move(sy);
          res = ry;
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      const double before = res;
      x = s.t;
      s = analytic_step(mu, x);
      res = max_gap(x, s.t);
      // Both Newton and Lloyd stalled: the residual sits at rounding level.
      if (res >= before && res <= 1e3 * tol) break;
    }
  }
  if (res > tol && !(res <= 1e3 * tol)) {
    throw ConvergenceError("optimal primal quantizer search did not converge", iter, x);
  }
  auto r = quantize(mu, Quantizer::from_1d(x));
  r.iterations = iter;
  return r;
}

std::vector<double> sqrt_density_coefficients(std::size_t n) {
  std::vector<double> c{0.0, 1.0};
  for (std::size_t k = 1; k < n; ++k) {
    const double a = c[k], b = c[k - 1];
    c.push_back(0.5 * (std::sqrt(17.0 * a * a - 4.0 * a * b - 4.0 * b * b) - a));
  }
  c.resize(n + 1);
  return c;
}

Quantizer sqrt_density_grid(std::size_t n, double a, double b) {
  if (n == 0) throw InvalidInput("N must be at least 1");
  if (!(a < b)) throw InvalidInput("sqrt_density_grid needs a < b");
  const auto c = sqrt_density_coefficients(n);
  const double denom = 3.0 * c[n] * c[n];
  std::vector<double> x(n);
  for (std::size_t k = 1; k <= n; ++k) {
    x[k - 1] = a + (b - a) * (c[k] * c[k] + c[k] * c[k - 1] + c[k - 1] * c[k - 1]) / denom;
  }
  return Quantizer::from_1d(std::move(x));
}

}  // namespace martquant
