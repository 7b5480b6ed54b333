#include <doctest.h>

#include <cmath>
#include <random>

#include "martquant/errors.hpp"
#include "martquant/primal.hpp"
#include "martquant/transport.hpp"
#include "oracles.hpp"

using namespace martquant;

namespace {

// Cell means by brute-force nearest-point assignment, independent of project().
double brute_stationarity(const DiscreteMeasure& mu, const Quantizer& g) {
  const std::size_t d = mu.dim(), n = g.size();
  std::vector<double> mass(n, 0.0), first(n * d, 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    std::size_t best = 0;
    double bd = INFINITY;
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += std::pow(mu.point(i)[c] - g.point(k)[c], 2);
      if (s < bd) {
        bd = s;
        best = k;
      }
    }
    mass[best] += mu.weight(i);
    for (std::size_t c = 0; c < d; ++c) first[best * d + c] += mu.weight(i) * mu.point(i)[c];
  }
  double r = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (mass[k] == 0.0) continue;
    for (std::size_t c = 0; c < d; ++c) r = std::max(r, std::abs(first[k * d + c] / mass[k] - g.point(k)[c]));
  }
  return r;
}

DiscreteMeasure random_measure(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> x(n * d), w(n);
  for (auto& v : x) v = unif(rng);
  for (auto& v : w) v = 0.05 + unif(rng);
  return DiscreteMeasure::from_unnormalized(d, x, w);
}

}  // namespace

TEST_CASE("projection examples and tie rule") {
  auto g = Quantizer::from_1d({0.0, 1.0});
  CHECK(project(g, 0.3) == 0);
  CHECK(project(g, 0.5) == 0);
  CHECK(project(g, 0.500001) == 1);
  CHECK(project(Quantizer::from_1d({1.0 / 6, 0.5, 5.0 / 6}), 0.34) == 1);
  auto g2 = Quantizer(2, {0.0, 0.0, 1.0, 0.0});
  const double mid[2] = {0.5, 0.3};
  CHECK(project(g2, std::span<const double>(mid, 2)) == 0);
  CHECK_THROWS_AS(Quantizer::from_1d({0.2, 0.2}), InvalidInput);
  CHECK(Quantizer::from_1d({0.7, 0.1}).x(0) == 0.1);
}

TEST_CASE("distortion closed forms") {
  const auto u = fixtures::uniform01();
  for (double p : {1.0, 2.0, 3.0}) {
    for (std::size_t n : {1, 2, 5, 17}) {
      std::vector<double> pts(n);
      for (std::size_t k = 0; k < n; ++k) pts[k] = (2.0 * k + 1) / (2.0 * n);
      const double e = 1.0 / (2.0 * std::pow(p + 1.0, 1.0 / p) * n);
      CHECK(distortion(u, Quantizer::from_1d(pts), p) == doctest::Approx(std::pow(e, p)).epsilon(1e-12));
    }
  }
  CHECK(distortion(u, Quantizer::from_1d({0.5}), 2.0) == doctest::Approx(1.0 / 12).epsilon(1e-14));
  auto m = DiscreteMeasure::from_1d({0.1, 0.4, 0.9}, {0.2, 0.5, 0.3});
  CHECK(distortion(m, Quantizer::from_1d({0.1, 0.4, 0.9, 2.0}), 1.5) == 0.0);
  // Nearest points: 0.1 → 0, 0.4 → 0.5, 0.9 → 0.5.
  CHECK(distortion(m, Quantizer::from_1d({0.0, 0.5}), 2.0) ==
        doctest::Approx(0.2 * 0.01 + 0.5 * 0.01 + 0.3 * 0.16));
  CHECK_THROWS_AS(distortion(m, Quantizer::from_1d({0.0}), 0.5), InvalidInput);
}

TEST_CASE("analytic distortion agrees with quantile quadrature") {
  for (const auto& m : {fixtures::tri2x(), fixtures::invsqrt(), Analytic1DMeasure::power(3.0, -1.0, 2.0)}) {
    auto g = Quantizer::from_1d({m.lower() + 0.1 * m.scale(), m.lower() + 0.45 * m.scale(),
                                 m.lower() + 0.8 * m.scale()});
    for (double p : {1.0, 2.0, 2.5}) {
      // Split the quadrature at the Voronoi boundaries and at the grid points so
      // every piece is smooth.
      std::vector<double> cuts{0.0};
      for (std::size_t k = 0; k < g.size(); ++k) {
        cuts.push_back(m.cdf(g.x(k)));
        if (k + 1 < g.size()) cuts.push_back(m.cdf(0.5 * (g.x(k) + g.x(k + 1))));
      }
      cuts.push_back(1.0);
      double ref = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        auto f = [&](double x) { return std::pow(std::abs(x - g.x(k)), p); };
        ref += oracle::quantile_integral(m, f, 400, cuts[2 * k], cuts[2 * k + 1]) +
               oracle::quantile_integral(m, f, 400, cuts[2 * k + 1], cuts[2 * k + 2]);
      }
      CHECK(distortion(m, g, p) == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("lloyd returns the support when N is large enough") {
  auto m = DiscreteMeasure::from_1d({0.2, 0.7, 0.9}, {0.3, 0.3, 0.4});
  auto r = lloyd(m, 3);
  REQUIRE(r.quantizer.size() == 3);
  CHECK(r.quantizer.x(1) == 0.7);
  CHECK(r.distortion_p == 0.0);
  CHECK(lloyd(m, 5).quantizer.size() == 3);
  CHECK_THROWS_AS(lloyd(m, 0), InvalidInput);
}

TEST_CASE("lloyd on a fine uniform discretization") {
  auto r = lloyd(discretize(fixtures::uniform01(), 1000), 3);
  REQUIRE(r.quantizer.size() == 3);
  CHECK(std::abs(r.quantizer.x(0) - 1.0 / 6) <= 2e-3);
  CHECK(std::abs(r.quantizer.x(1) - 0.5) <= 2e-3);
  CHECK(std::abs(r.quantizer.x(2) - 5.0 / 6) <= 2e-3);
}

TEST_CASE("lloyd matches brute force on symmetric four atoms") {
  // The symmetric codebook is optimal once a > √(4/3) − 1; below that {−1, 1/3} wins.
  for (double a : {0.2, 0.3, 0.5, 0.8}) {
    auto m = DiscreteMeasure::from_1d({-1.0, -a, a, 1.0}, {0.25, 0.25, 0.25, 0.25});
    auto r = lloyd(m, 2);
    auto [b0, b1] = oracle::brute_force_codebook2(m, -1.0, 1.0, 400);
    CHECK(r.quantizer.x(0) == doctest::Approx(-(1 + a) / 2).epsilon(1e-12));
    CHECK(r.quantizer.x(1) == doctest::Approx((1 + a) / 2).epsilon(1e-12));
    CHECK(std::abs(r.quantizer.x(0) - b0) <= 5e-3);
    CHECK(std::abs(r.quantizer.x(1) - b1) <= 5e-3);
  }
}

TEST_CASE("lloyd outputs are stationary, satisfy the moment identity and sit below in convex order") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = random_measure(rng, 40, 1);
    const std::size_t n = 2 + trial % 7;
    auto r = lloyd(m, n);
    CHECK(brute_stationarity(m, r.quantizer) <= 1e-9);
    CHECK(stationarity_residual(m, r.quantizer) <= 1e-9);
    CHECK(r.distortion_p == doctest::Approx(oracle::second_moment(m) - oracle::second_moment(r.pushforward)).epsilon(1e-9));
    CHECK(convex_order_leq_1d(r.pushforward, m));
    REQUIRE(r.coupling.has_value());
    CHECK(r.coupling->marginal_residual(r.pushforward, m) <= 1e-12);
  }
  for (int trial = 0; trial < 5; ++trial) {
    auto m = random_measure(rng, 25, 2);
    auto r = lloyd(m, 4);
    CHECK(brute_stationarity(m, r.quantizer) <= 1e-9);
    CHECK(r.distortion_p == doctest::Approx(m.second_moment() - r.pushforward.second_moment()).epsilon(1e-9));
    CHECK(convex_order_feasible(r.pushforward, m));
  }
}

TEST_CASE("lloyd distortion decreases in N on a fixed measure") {
  auto m = discretize(fixtures::tri2x(), 300);
  double prev = INFINITY;
  for (std::size_t n = 1; n <= 12; ++n) {
    const double e = lloyd(m, n).distortion_p;
    CHECK(e <= prev + 1e-12);
    prev = e;
  }
}

TEST_CASE("an optimal grid is reused by a convex-order intermediate") {
  auto m = discretize(fixtures::invsqrt(), 200);
  auto r = lloyd(m, 5);
  std::vector<double> x = m.coords(), w;
  for (double v : m.weights()) w.push_back(0.5 * v);
  for (std::size_t k = 0; k < r.pushforward.size(); ++k) {
    x.push_back(r.pushforward.x(k));
    w.push_back(0.5 * r.pushforward.weight(k));
  }
  auto nu = DiscreteMeasure::from_1d(x, w);
  LloydOptions opt;
  opt.init = r.quantizer;
  auto s = lloyd(nu, 5, opt);
  for (std::size_t k = 0; k < 5; ++k) CHECK(s.quantizer.x(k) == doctest::Approx(r.quantizer.x(k)).epsilon(1e-10));
  CHECK(stationarity_residual(nu, r.quantizer) <= 1e-10);
}

TEST_CASE("lloyd reports non-convergence with the last iterate") {
  auto m = discretize(fixtures::invsqrt(), 500);
  LloydOptions opt;
  opt.max_iter = 2;
  try {
    lloyd(m, 6, opt);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.iterations() == 2);
    CHECK(e.last_iterate().size() == 6);
  }
}

TEST_CASE("optimal primal grids of analytic laws") {
  auto u = optimal_primal_1d(fixtures::uniform01(), 5);
  for (std::size_t k = 0; k < 5; ++k) CHECK(u.quantizer.x(k) == doctest::Approx(0.1 + 0.2 * k).epsilon(1e-10));
  CHECK(u.distortion_p == doctest::Approx(1.0 / 300).epsilon(1e-10));

  const double c2 = (std::sqrt(17.0) - 1.0) / 2.0;
  auto s = optimal_primal_1d(fixtures::invsqrt(), 2);
  CHECK(s.quantizer.x(0) == doctest::Approx(1.0 / (3 * c2 * c2)).epsilon(1e-10));
  CHECK(s.quantizer.x(1) == doctest::Approx((c2 * c2 + c2 + 1) / (3 * c2 * c2)).epsilon(1e-10));

  auto t = optimal_primal_1d(fixtures::tri2x(), 1);
  CHECK(t.quantizer.x(0) == doctest::Approx(2.0 / 3).epsilon(1e-14));

  for (std::size_t n = 2; n <= 12; ++n) {
    auto r = optimal_primal_1d(fixtures::tri2x(), n);
    CHECK(stationarity_residual(fixtures::tri2x(), r.quantizer) <= 1e-10);
    CHECK(r.distortion_p == doctest::Approx(fixtures::tri2x().second_moment() -
                                            oracle::second_moment(r.pushforward)).epsilon(1e-9));
  }
}

TEST_CASE("closed-form grid of the inverse square-root density") {
  auto c = sqrt_density_coefficients(3);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == 1.0);
  CHECK(c[2] == doctest::Approx((std::sqrt(17.0) - 1.0) / 2.0).epsilon(1e-15));
  CHECK(c[3] == doctest::Approx((std::sqrt(17 * c[2] * c[2] - 4 * c[2] - 4) - c[2]) / 2).epsilon(1e-15));

  CHECK(sqrt_density_grid(1).x(0) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  auto g2 = sqrt_density_grid(2);
  auto o2 = optimal_primal_1d(fixtures::invsqrt(), 2);
  for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(g2.x(k) - o2.quantizer.x(k)) <= 1e-10);

  for (std::size_t n = 1; n <= 20; ++n) {
    auto g = sqrt_density_grid(n);
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(g.x(k) > 0.0);
      CHECK(g.x(k) < 1.0);
    }
    CHECK(stationarity_residual(fixtures::invsqrt(), g) <= 1e-10);
  }
  // Affine map of the support.
  auto g = sqrt_density_grid(4, -1.0, 3.0), h = sqrt_density_grid(4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(g.x(k) == doctest::Approx(-1.0 + 4.0 * h.x(k)).epsilon(1e-14));
  CHECK_THROWS_AS(sqrt_density_grid(3, 1.0, 1.0), InvalidInput);
}
