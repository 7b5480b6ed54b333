#include "martquant/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "martquant/errors.hpp"

namespace martquant {

namespace {

bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

bool is_small_integer(double p) { return p >= 0.0 && p <= 40.0 && p == std::floor(p); }

}  // namespace

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure::DiscreteMeasure(std::size_t dim, std::vector<double> coords,
                                 std::vector<double> weights)
    : dim_(dim) {
  if (dim == 0) throw InvalidInput("measure dimension must be at least 1");
  if (coords.size() != weights.size() * dim)
    throw InvalidInput("measure: coordinate count does not match weights × dim");
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidInput("measure: weights must be finite and nonnegative");
    total += w;
  }
  for (double c : coords)
    if (!std::isfinite(c)) throw InvalidInput("measure: coordinates must be finite");
  if (std::abs(total - 1.0) > tol::kMassInput)
    throw InvalidInput("measure: weights sum to " + std::to_string(total) + ", expected 1");

  const std::size_t n = weights.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto pt = [&](std::size_t i) { return std::span<const double>(coords.data() + i * dim, dim); };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lex_less(pt(a), pt(b)); });

  for (std::size_t idx : order) {
    if (weights[idx] == 0.0) continue;
    auto p = pt(idx);
    if (!weights_.empty() && std::equal(p.begin(), p.end(), coords_.end() - dim)) {
      weights_.back() += weights[idx];
      continue;
    }
    coords_.insert(coords_.end(), p.begin(), p.end());
    weights_.push_back(weights[idx]);
  }
  if (weights_.empty()) throw InvalidInput("measure: no atom carries positive mass");
  const double s = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  for (double& w : weights_) w /= s;
}

DiscreteMeasure DiscreteMeasure::from_1d(std::vector<double> points, std::vector<double> weights) {
  return DiscreteMeasure(1, std::move(points), std::move(weights));
}

DiscreteMeasure DiscreteMeasure::dirac(std::vector<double> point) {
  const std::size_t d = point.size();
  return DiscreteMeasure(d, std::move(point), {1.0});
}

DiscreteMeasure DiscreteMeasure::from_unnormalized(std::size_t dim, std::vector<double> coords,
                                                   std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidInput("measure: weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidInput("measure: total mass must be positive");
  for (double& w : weights) w /= total;
  return DiscreteMeasure(dim, std::move(coords), std::move(weights));
}

std::vector<double> DiscreteMeasure::mean() const {
  std::vector<double> m(dim_, 0.0);
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t k = 0; k < dim_; ++k) m[k] += weights_[i] * coords_[i * dim_ + k];
  return m;
}

double DiscreteMeasure::second_moment() const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) r2 += coords_[i * dim_ + k] * coords_[i * dim_ + k];
    s += weights_[i] * r2;
  }
  return s;
}

double DiscreteMeasure::radius() const {
  double r = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) r2 += coords_[i * dim_ + k] * coords_[i * dim_ + k];
    r = std::max(r, std::sqrt(r2));
  }
  return r;
}

std::size_t DiscreteMeasure::find(std::span<const double> p) const {
  if (p.size() != dim_) return size();
  std::size_t lo = 0, hi = size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (lex_less(point(mid), p))
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo < size() && std::equal(p.begin(), p.end(), point(lo).begin())) return lo;
  return size();
}

// ---------------------------------------------------------------------------
// Analytic1DMeasure

Analytic1DMeasure::Analytic1DMeasure(Family f, double rho, double offset, double scale)
    : family_(f), rho_(rho), offset_(offset), scale_(scale) {}

Analytic1DMeasure Analytic1DMeasure::uniform(double lo, double hi) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw InvalidInput("uniform measure needs finite lo < hi");
  return Analytic1DMeasure(Family::uniform, 1.0, lo, hi - lo);
}

Analytic1DMeasure Analytic1DMeasure::power(double rho, double offset, double scale) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidInput("power measure needs rho > 0");
  if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(offset))
    throw InvalidInput("power measure needs a finite offset and a positive scale");
  return Analytic1DMeasure(Family::power, rho, offset, scale);
}

double Analytic1DMeasure::cdf(double x) const {
  const double t = (x - offset_) / scale_;
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return family_ == Family::uniform ? t : std::pow(t, rho_);
}

double Analytic1DMeasure::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw InvalidInput("quantile level must lie in (0, 1)");
  const double t = family_ == Family::uniform ? u : std::pow(u, 1.0 / rho_);
  return offset_ + scale_ * t;
}

double Analytic1DMeasure::density(double x) const {
  const double t = (x - offset_) / scale_;
  if (t < 0.0 || t > 1.0) return 0.0;
  if (family_ == Family::uniform) return 1.0 / scale_;
  return rho_ * std::pow(t, rho_ - 1.0) / scale_;
}

double Analytic1DMeasure::partial_moment(int p, double lo, double hi) const {
  if (p < 0) throw InvalidInput("partial_moment: p must be nonnegative");
  if (lo > hi) throw InvalidInput("partial_moment: lo must not exceed hi");
  lo = std::max(lo, lower());
  hi = std::min(hi, upper());
  if (lo >= hi) return 0.0;
  if (family_ == Family::uniform)
    return (std::pow(hi, p + 1) - std::pow(lo, p + 1)) / ((p + 1) * scale_);
  const double t0 = (lo - offset_) / scale_;
  const double t1 = (hi - offset_) / scale_;
  double sum = 0.0;
  for (int k = 0; k <= p; ++k) {
    const double ik = rho_ / (k + rho_) * (std::pow(t1, k + rho_) - std::pow(t0, k + rho_));
    sum += binomial(p, k) * std::pow(offset_, p - k) * std::pow(scale_, k) * ik;
  }
  return sum;
}

std::vector<double> Analytic1DMeasure::shifted_moments(double c, double lo, double hi,
                                                       int max_degree) const {
  std::vector<double> out(static_cast<std::size_t>(max_degree) + 1, 0.0);
  lo = std::max(lo, lower());
  hi = std::min(hi, upper());
  if (lo >= hi) return out;
  if (family_ == Family::uniform) {
    double a = lo - c, b = hi - c, pa = a, pb = b;
    for (int k = 0; k <= max_degree; ++k) {
      out[k] = (pb - pa) / ((k + 1) * scale_);
      pa *= a;
      pb *= b;
    }
    return out;
  }
  const double t0 = (lo - offset_) / scale_;
  const double t1 = (hi - offset_) / scale_;
  std::vector<double> ij(out.size());
  for (int j = 0; j <= max_degree; ++j)
    ij[j] = rho_ / (j + rho_) * (std::pow(t1, j + rho_) - std::pow(t0, j + rho_));
  const double shift = offset_ - c;
  for (int k = 0; k <= max_degree; ++k) {
    double s = 0.0;
    for (int j = 0; j <= k; ++j)
      s += binomial(k, j) * std::pow(shift, k - j) * std::pow(scale_, j) * ij[j];
    out[k] = s;
  }
  return out;
}

double Analytic1DMeasure::abs_moment(double c, double p, double lo, double hi) const {
  if (p < 0.0) throw InvalidInput("abs_moment: p must be nonnegative");
  lo = std::max(lo, lower());
  hi = std::min(hi, upper());
  if (lo >= hi) return 0.0;
  const double left_hi = std::min(hi, c);
  const double right_lo = std::max(lo, c);

  if (family_ == Family::uniform) {
    double s = 0.0;
    if (lo < left_hi) s += (std::pow(c - lo, p + 1) - std::pow(c - left_hi, p + 1)) / (p + 1);
    if (right_lo < hi) s += (std::pow(hi - c, p + 1) - std::pow(right_lo - c, p + 1)) / (p + 1);
    return s / scale_;
  }
  if (is_small_integer(p)) {
    const int ip = static_cast<int>(p);
    double s = 0.0;
    if (lo < left_hi) s += (ip % 2 == 0 ? 1.0 : -1.0) * shifted_moments(c, lo, left_hi, ip)[ip];
    if (right_lo < hi) s += shifted_moments(c, right_lo, hi, ip)[ip];
    return s;
  }
  // Non-integer exponent on a power law: integrate in quantile space, split at the kink.
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto piece = [&](double a, double b) {
    const double u0 = cdf(a), u1 = cdf(b);
    if (u1 <= u0) return 0.0;
    auto f = [&](double u) {
      const double t = std::pow(u, 1.0 / rho_);
      return std::pow(std::abs(offset_ + scale_ * t - c), p);
    };
    return integrator.integrate(f, u0, u1);
  };
  double s = 0.0;
  if (lo < left_hi) s += piece(lo, left_hi);
  if (right_lo < hi) s += piece(right_lo, hi);
  return s;
}

double Analytic1DMeasure::quantile_integral(double u0, double u1) const {
  u0 = std::clamp(u0, 0.0, 1.0);
  u1 = std::clamp(u1, 0.0, 1.0);
  if (family_ == Family::uniform)
    return offset_ * (u1 - u0) + scale_ * (u1 * u1 - u0 * u0) / 2.0;
  const double e = (1.0 + rho_) / rho_;
  return offset_ * (u1 - u0) + scale_ * rho_ / (1.0 + rho_) * (std::pow(u1, e) - std::pow(u0, e));
}

double Analytic1DMeasure::mean() const { return quantile_integral(0.0, 1.0); }

double Analytic1DMeasure::second_moment() const { return partial_moment(2, lower(), upper()); }

// ---------------------------------------------------------------------------
// Potential functions and convex order

PotentialFunction::PotentialFunction(const DiscreteMeasure& m) {
  if (m.dim() != 1) throw InvalidInput("potential functions are defined for 1D measures only");
  const std::size_t n = m.size();
  breakpoints_.resize(n);
  values_.resize(n);
  slopes_.resize(n + 1);
  slopes_[0] = 0.0;
  double cum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    breakpoints_[k] = m.x(k);
    values_[k] = k == 0 ? 0.0 : values_[k - 1] + cum * (breakpoints_[k] - breakpoints_[k - 1]);
    cum += m.weight(k);
    slopes_[k + 1] = k + 1 == n ? 1.0 : std::min(cum, 1.0);
  }
  mean_ = m.mean()[0];
}

double PotentialFunction::operator()(double x) const {
  if (breakpoints_.empty() || x <= breakpoints_.front()) return 0.0;
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  return values_[k] + slopes_[k + 1] * (x - breakpoints_[k]);
}

PotentialFunction potential(const DiscreteMeasure& m) { return PotentialFunction(m); }

bool convex_order_leq_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tolerance) {
  if (mu.dim() != 1 || nu.dim() != 1)
    throw InvalidInput("convex_order_leq_1d needs 1D measures");
  const PotentialFunction phi_mu(mu), phi_nu(nu);
  if (std::abs(phi_mu.mean() - phi_nu.mean()) > tolerance) return false;
  auto dominated_at = [&](double z) { return phi_nu(z) >= phi_mu(z) - tolerance; };
  for (double z : phi_mu.breakpoints())
    if (!dominated_at(z)) return false;
  for (double z : phi_nu.breakpoints())
    if (!dominated_at(z)) return false;
  return true;
}

DiscreteMeasure discretize(const Analytic1DMeasure& m, std::size_t n) {
  if (n == 0) throw InvalidInput("discretize: n must be at least 1");
  std::vector<double> pts(n), w(n, 1.0 / static_cast<double>(n));
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k)
    pts[k] = dn * m.quantile_integral(static_cast<double>(k) / dn, static_cast<double>(k + 1) / dn);
  return DiscreteMeasure::from_1d(std::move(pts), std::move(w));
}

DiscreteMeasure affine_image_1d(const DiscreteMeasure& m, double factor, double shift) {
  if (m.dim() != 1) throw InvalidInput("affine_image_1d needs a 1D measure");
  if (factor == 0.0) throw InvalidInput("affine_image_1d: factor must be nonzero");
  std::vector<double> pts(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) pts[i] = shift + factor * m.x(i);
  return DiscreteMeasure::from_1d(std::move(pts), m.weights());
}

namespace fixtures {

DiscreteMeasure mu6() {
  return DiscreteMeasure::from_1d({0.0, 2.0 / 5, 7.0 / 15, 8.0 / 15, 3.0 / 5, 1.0},
                                  {1.0 / 5, 7.0 / 30, 1.0 / 15, 1.0 / 15, 7.0 / 30, 1.0 / 5});
}

DiscreteMeasure mu6_check() {
  return DiscreteMeasure::from_1d({0.0, 1.0 / 5, 2.0 / 5, 3.0 / 5, 4.0 / 5, 1.0},
                                  {1.0 / 10, 1.0 / 5, 1.0 / 5, 1.0 / 5, 1.0 / 5, 1.0 / 10});
}

Analytic1DMeasure uniform01() { return Analytic1DMeasure::uniform(0.0, 1.0); }
Analytic1DMeasure tri2x() { return Analytic1DMeasure::power(2.0); }
Analytic1DMeasure invsqrt() { return Analytic1DMeasure::power(0.5); }

DiscreteMeasure tri2x_dual_family(double u) {
  if (!(u > 0.0 && u < 1.0)) throw InvalidInput("tri2x_dual_family: u must lie in (0, 1)");
  const double r = std::sqrt(u);
  return DiscreteMeasure::from_1d({0.0, r, 1.0}, {u / 3.0, (1.0 + r) / 3.0, (2.0 - r - u) / 3.0});
}

}  // namespace fixtures

}  // namespace martquant
