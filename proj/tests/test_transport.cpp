#include <doctest.h>

#include <cmath>
#include <random>

#include "martquant/errors.hpp"
#include "martquant/transport.hpp"
#include "oracles.hpp"

using namespace martquant;

namespace {

DiscreteMeasure random_1d(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> x(n), w(n);
  for (auto& v : x) v = unif(rng);
  for (auto& v : w) v = 0.05 + unif(rng);
  return DiscreteMeasure::from_unnormalized(1, x, w);
}

}  // namespace

TEST_CASE("coupling construction canonicalizes and validates") {
  const double src[2] = {0.5, 0.0}, dst[3] = {1.0, -1.0, 1.0};
  Coupling c(1, src, dst, {{0, 0, 0.25}, {0, 2, 0.25}, {1, 1, 0.5}});
  CHECK(c.source_marginal().x(0) == 0.0);
  CHECK(c.source_marginal().weight(1) == doctest::Approx(0.5));
  CHECK(c.target_marginal().size() == 2);
  CHECK(c.entries().size() == 2);
  CHECK(c.row(1).size() == 1);
  CHECK(c.row(1)[0].w == doctest::Approx(0.5));
  CHECK(c.kernel(0).x(0) == -1.0);
  CHECK_THROWS_AS(Coupling(1, src, dst, {{0, 0, 0.3}}), InvalidInput);
  CHECK_THROWS_AS(Coupling(1, src, dst, {{0, 7, 1.0}}), InvalidInput);
  CHECK_THROWS_AS(Coupling(1, src, dst, {{0, 0, 1.5}, {1, 1, -0.5}}), InvalidInput);

  const double s2[1] = {0.0}, d2[2] = {-1.0, 1.0};
  Coupling m(1, s2, d2, {{0, 0, 0.5}, {0, 1, 0.5}});
  CHECK(m.martingale_residual() == 0.0);
  CHECK_NOTHROW(MartingaleCoupling{m});
  Coupling bad(1, s2, d2, {{0, 0, 0.25}, {0, 1, 0.75}});
  CHECK_THROWS_AS(MartingaleCoupling{bad}, InvalidInput);
  auto joint = m.as_joint_measure();
  CHECK(joint.dim() == 2);
  CHECK(joint.size() == 2);
}

TEST_CASE("cost specifications") {
  const double x[1] = {0.5}, y[1] = {1.25};
  CHECK(CostSpec::abs_power(2)(x, y) == doctest::Approx(0.5625));
  CHECK(CostSpec::forward_call(0.5)(x, y) == doctest::Approx(0.25));
  CHECK(CostSpec::forward_put(0.5)(x, y) == 0.0);
  CHECK(CostSpec::scalar_product()(x, y) == doctest::Approx(0.625));
  CHECK_THROWS_AS(CostSpec::matrix({{1.0}})(x, y), InvalidInput);
  const auto mu = DiscreteMeasure::from_1d({0.0, 1.0}, {0.5, 0.5});
  const auto tab = CostSpec::abs_power(1).tabulate(mu, mu);
  CHECK(tab == std::vector<double>{0.0, 1.0, 1.0, 0.0});
  CHECK_THROWS_AS(CostSpec::matrix({{1.0, 2.0}}).tabulate(mu, mu), InvalidInput);
}

TEST_CASE("W_p examples") {
  CHECK(w_p(DiscreteMeasure::dirac({0.0}), DiscreteMeasure::dirac({1.0}), 1.0).value == doctest::Approx(1.0));
  const auto u = discretize(fixtures::uniform01(), 3000);
  for (double p : {1.0, 2.0, 3.0}) {
    for (std::size_t n : {2, 5}) {
      std::vector<double> g(n), w(n, 1.0 / n);
      for (std::size_t k = 0; k < n; ++k) g[k] = (2.0 * k + 1) / (2.0 * n);
      const double ref = std::pow(1.0 / (2 * std::pow(p + 1, 1 / p) * n), p);
      const auto r = w_p(u, DiscreteMeasure::from_1d(g, w), p);
      CHECK(r.value == doctest::Approx(ref).epsilon(1e-5));
      CHECK(w_p_semidiscrete_1d(fixtures::uniform01(), DiscreteMeasure::from_1d(g, w), p) ==
            doctest::Approx(ref).epsilon(1e-13));
    }
  }
  const auto t = discretize(fixtures::tri2x(), 2000);
  CHECK(w_p(t, fixtures::tri2x_dual_family(1.0 / 3.0), 2.0).value == doctest::Approx(0.0199758).epsilon(1e-2));
  CHECK(std::abs(w_p_semidiscrete_1d(fixtures::tri2x(), fixtures::tri2x_dual_family(1.0 / 3.0), 2.0) - 0.0199758) <= 1e-7);
}

TEST_CASE("quantile fast path agrees with the LP") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto mu = random_1d(rng, 1 + trial % 9), nu = random_1d(rng, 1 + (trial / 9) % 8);
    const double p = trial % 3 == 0 ? 1.0 : (trial % 3 == 1 ? 2.0 : 1.5);
    const auto fast = w_p(mu, nu, p), slow = w_p(mu, nu, p, TransportMethod::linear_program);
    CHECK(fast.value == doctest::Approx(slow.value).epsilon(1e-9));
    CHECK(fast.coupling.marginal_residual(mu, nu) <= 1e-10);
    CHECK(slow.coupling.marginal_residual(mu, nu) <= 1e-10);
  }
}

TEST_CASE("W_p metric axioms") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = random_1d(rng, 6), b = random_1d(rng, 7), c = random_1d(rng, 5);
    for (double p : {1.0, 2.0}) {
      const double ab = std::pow(w_p(a, b, p).value, 1 / p), ba = std::pow(w_p(b, a, p).value, 1 / p);
      const double bc = std::pow(w_p(b, c, p).value, 1 / p), ac = std::pow(w_p(a, c, p).value, 1 / p);
      CHECK(std::abs(ab - ba) <= 1e-10);
      CHECK(ac <= ab + bc + 1e-12);
      CHECK(w_p(a, a, p).value == doctest::Approx(0.0));
    }
  }
  std::mt19937_64 r2(44);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(8), y(10);
    for (auto& v : x) v = unif(r2);
    for (auto& v : y) v = unif(r2);
    const auto a = DiscreteMeasure::from_unnormalized(2, x, {1, 2, 1, 3});
    const auto b = DiscreteMeasure::from_unnormalized(2, y, {1, 1, 1, 1, 2});
    CHECK(w_p(a, b, 2.0).value == doctest::Approx(w_p(b, a, 2.0).value).epsilon(1e-10));
  }
}

TEST_CASE("transport LP matches vertex enumeration") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const auto mu = random_1d(rng, 3), nu = random_1d(rng, 4);
    std::vector<double> cost(12);
    for (auto& v : cost) v = unif(rng);
    auto P = oracle::transport_polytope(mu, nu, [](double, double) { return 0.0; }, false);
    for (int v = 0; v < 12; ++v) P.c[v] = cost[v];
    const auto ref = oracle::vertex_enumeration(P.A, P.b, P.c);
    REQUIRE(ref.has_value());
    CHECK(transport_lp(mu, nu, cost).value == doctest::Approx(*ref).epsilon(1e-9));
  }
}

TEST_CASE("martingale transport examples") {
  const auto d0 = DiscreteMeasure::dirac({0.0}), pm = DiscreteMeasure::from_1d({-1.0, 1.0}, {0.5, 0.5});
  CHECK(m_p(d0, pm, 1.0).value == doctest::Approx(1.0));
  CHECK(mot_value(d0, pm, CostSpec::abs_power(1)).value == doctest::Approx(1.0));
  CHECK_THROWS_AS(m_p(pm, d0, 2.0), InfeasibleError);
  try {
    mot_value(fixtures::mu6(), fixtures::mu6_check(), CostSpec::abs_power(1));
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(std::string(e.what()).find("Strassen") != std::string::npos);
  }
  CHECK_THROWS_AS(m_p(d0, DiscreteMeasure::from_1d({-1.0, 2.0}, {0.5, 0.5}), 1.0), InfeasibleError);
}

TEST_CASE("quadratic martingale cost is the second-moment difference") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pr = oracle::random_martingale_pair(rng, 1 + trial % 12, 1 + (trial * 7) % 12);
    const auto r = m_p(pr.mu, pr.nu, 2.0);
    CHECK(r.value == doctest::Approx(oracle::second_moment(pr.nu) - oracle::second_moment(pr.mu)).epsilon(1e-8));
    CHECK(r.coupling.coupling().marginal_residual(pr.mu, pr.nu) <= 1e-10);
    CHECK(r.coupling.coupling().martingale_residual() <= 1e-9);
    CHECK(m_p(pr.mu, pr.nu, 1.0).value >= w_p(pr.mu, pr.nu, 1.0).value - 1e-10);
    const auto lo = mot_value(pr.mu, pr.nu, CostSpec::forward_call(0.1));
    const auto hi = mot_value(pr.mu, pr.nu, CostSpec::forward_call(0.1), PriceBound::upper);
    CHECK(lo.value <= hi.value + 1e-10);
  }
}

TEST_CASE("MOT value matches vertex enumeration on 3x4 instances") {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int checked = 0;
  while (checked < 40) {
    const auto pr = oracle::random_martingale_pair(rng, 3, 4);
    if (pr.mu.size() != 3 || pr.nu.size() != 4) continue;
    std::vector<double> cost(12);
    for (auto& v : cost) v = unif(rng);
    auto P = oracle::transport_polytope(pr.mu, pr.nu, [](double, double) { return 0.0; }, true);
    for (int v = 0; v < 12; ++v) P.c[v] = cost[v];
    const auto ref = oracle::vertex_enumeration(P.A, P.b, P.c);
    REQUIRE(ref.has_value());
    const auto r = mot_value_table(pr.mu, pr.nu, cost);
    CHECK(r.value == doctest::Approx(*ref).epsilon(1e-9));
    auto neg = cost;
    for (auto& v : neg) v = -v;
    auto Pn = P;
    Pn.c = -P.c;
    const auto refn = oracle::vertex_enumeration(Pn.A, Pn.b, Pn.c);
    CHECK(mot_value_table(pr.mu, pr.nu, neg).value == doctest::Approx(*refn).epsilon(1e-9));
    ++checked;
  }
}

TEST_CASE("convex order feasibility") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 60; ++trial) {
    const auto a = random_1d(rng, 1 + trial % 6), b = random_1d(rng, 2 + trial % 7);
    // Shift b to a's mean so the question is about spread, not location.
    const auto bb = affine_image_1d(b, 1.0, a.mean()[0] - b.mean()[0]);
    CHECK(convex_order_feasible(a, bb) == convex_order_leq_1d(a, bb));
    CHECK(convex_order_feasible(DiscreteMeasure::dirac({bb.mean()[0]}), bb));
  }
  CHECK_FALSE(convex_order_feasible(fixtures::mu6(), fixtures::mu6_check()));
  CHECK_FALSE(convex_order_feasible(fixtures::mu6_check(), fixtures::mu6()));
  const auto inner = DiscreteMeasure(2, {-0.25, -0.25, -0.25, 0.25, 0.25, -0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25});
  const auto outer = DiscreteMeasure(2, {-1, -1, -1, 1, 1, -1, 1, 1}, {0.25, 0.25, 0.25, 0.25});
  CHECK(convex_order_feasible(inner, outer));
  CHECK_FALSE(convex_order_feasible(outer, inner));
  const auto m2 = mot_value(inner, outer, CostSpec::abs_power(2));
  CHECK(m2.value == doctest::Approx(outer.second_moment() - inner.second_moment()).epsilon(1e-10));
  CHECK(m2.coupling.coupling().martingale_residual() <= 1e-9);
}

TEST_CASE("tabulated and named costs agree") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pr = oracle::random_martingale_pair(rng, 4, 5);
    const auto spec = CostSpec::abs_power(1.5);
    const auto tab = spec.tabulate(pr.mu, pr.nu);
    std::vector<std::vector<double>> rows(pr.mu.size());
    for (std::size_t i = 0; i < pr.mu.size(); ++i) rows[i].assign(tab.begin() + i * pr.nu.size(), tab.begin() + (i + 1) * pr.nu.size());
    CHECK(mot_value(pr.mu, pr.nu, spec).value ==
          doctest::Approx(mot_value(pr.mu, pr.nu, CostSpec::matrix(rows)).value).epsilon(1e-12));
    CHECK(mot_value(pr.mu, pr.nu, CostSpec::scalar_product()).value ==
          doctest::Approx(oracle::second_moment(pr.mu)).epsilon(1e-9));
  }
}
