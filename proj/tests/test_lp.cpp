#include <doctest.h>

#include <random>

#include "martquant/errors.hpp"
#include "martquant/lp.hpp"
#include "oracles.hpp"

using namespace martquant;

namespace {

lp::LinearProgram from_eigen(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const auto m = static_cast<std::size_t>(A.rows()), n = static_cast<std::size_t>(A.cols());
  std::vector<double> a(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = A(static_cast<int>(i), static_cast<int>(j));
  return lp::LinearProgram::dense(m, n, a, {b.data(), b.data() + m}, {c.data(), c.data() + n},
                                  std::vector<double>(n, 0.0), std::vector<double>(n, lp::kInfinity));
}

void check_certificates(const lp::LinearProgram& prog, const lp::LpSolution& s) {
  CHECK(s.primal_residual <= 1e-9);
  CHECK(s.complementarity_residual <= 1e-7);
  CHECK(s.duality_gap <= 1e-7 * (1.0 + std::abs(s.objective)));
  for (std::size_t j = 0; j < prog.cols(); ++j) {
    CHECK(s.x[j] >= prog.lower()[j] - 1e-12);
    CHECK(s.x[j] <= prog.upper()[j] + 1e-12);
  }
}

}  // namespace

TEST_CASE("single bounded variable") {
  lp::LinearProgram prog(1);
  prog.add_variable(1.0, {{0, 1.0}}, 0.0, 2.0);
  prog.set_rhs(0, 1.0);
  auto s = lp::solve(prog);
  REQUIRE(s.status == lp::Status::optimal);
  CHECK(s.x[0] == doctest::Approx(1.0));
  CHECK(s.objective == doctest::Approx(1.0));
  check_certificates(prog, s);
}

TEST_CASE("forced transport plan from a point mass") {
  // δ_0 → ½δ_{-1} + ½δ_1 with |x − y|: rows are the source mass and two target masses.
  lp::LinearProgram prog(3);
  prog.set_rhs(0, 1.0);
  prog.set_rhs(1, 0.5);
  prog.set_rhs(2, 0.5);
  prog.add_variable(1.0, {{0, 1.0}, {1, 1.0}});
  prog.add_variable(1.0, {{0, 1.0}, {2, 1.0}});
  auto s = lp::solve(prog);
  REQUIRE(s.status == lp::Status::optimal);
  CHECK(s.objective == doctest::Approx(1.0));
  check_certificates(prog, s);
}

TEST_CASE("infeasible and unbounded programs are reported") {
  lp::LinearProgram inf(2);
  inf.add_variable(0.0, {{0, 1.0}, {1, 1.0}});
  inf.set_rhs(0, 1.0);
  inf.set_rhs(1, 2.0);
  CHECK(lp::solve(inf).status == lp::Status::infeasible);

  lp::LinearProgram unb(1);
  unb.add_variable(-1.0, {{0, 1.0}});
  unb.add_variable(0.0, {{0, -1.0}});
  unb.set_rhs(0, 0.0);
  CHECK(lp::solve(unb).status == lp::Status::unbounded);

  lp::LinearProgram bad(1);
  CHECK_THROWS_AS(bad.add_variable(0.0, {{0, 1.0}}, 1.0, 0.0), InvalidInput);
  CHECK_THROWS_AS(bad.add_variable(0.0, {{3, 1.0}}), InvalidInput);
}

TEST_CASE("random 6x10 programs match vertex enumeration") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd A(6, 10);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 10; ++j) A(i, j) = unif(rng) < 0.3 ? 0.0 : 2.0 * unif(rng) - 1.0;
    Eigen::VectorXd x0(10);
    for (int j = 0; j < 10; ++j) x0[j] = unif(rng) < 0.5 ? 0.0 : unif(rng);
    Eigen::VectorXd b = A * x0;
    Eigen::VectorXd c(10);
    for (int j = 0; j < 10; ++j) c[j] = unif(rng);
    const auto ref = oracle::vertex_enumeration(A, b, c);
    REQUIRE(ref.has_value());
    const auto prog = from_eigen(A, b, c);
    const auto s = lp::solve(prog);
    REQUIRE(s.status == lp::Status::optimal);
    CHECK(s.objective == doctest::Approx(*ref).epsilon(1e-9));
    check_certificates(prog, s);
  }
}

TEST_CASE("scaling the objective scales the value") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(5, 9, [&]() { return 2.0 * unif(rng) - 1.0; });
    Eigen::VectorXd x0 = Eigen::VectorXd::NullaryExpr(9, [&]() { return unif(rng); });
    Eigen::VectorXd c = Eigen::VectorXd::NullaryExpr(9, [&]() { return unif(rng); });
    auto prog = from_eigen(A, A * x0, c);
    const auto s1 = lp::solve(prog);
    const double lambda = 0.1 + 10.0 * unif(rng);
    prog.scale_objective(lambda);
    const auto s2 = lp::solve(prog);
    REQUIRE(s1.status == lp::Status::optimal);
    REQUIRE(s2.status == lp::Status::optimal);
    CHECK(s2.objective == doctest::Approx(lambda * s1.objective).epsilon(1e-9));
    // The first optimum stays optimal for the scaled objective.
    double v = 0.0;
    for (std::size_t j = 0; j < prog.cols(); ++j) v += prog.cost()[j] * s1.x[j];
    CHECK(v == doctest::Approx(s2.objective).epsilon(1e-9));
  }
}

TEST_CASE("martingale constraints with unequal means are infeasible") {
  // μ = δ_0, ν = δ_1: one variable, mass rows and a barycenter row (1 − 0)π = 0.
  lp::LinearProgram prog(2);
  prog.set_rhs(0, 1.0);
  prog.add_variable(0.0, {{0, 1.0}, {1, 1.0}});
  CHECK(lp::solve(prog).status == lp::Status::infeasible);
}

TEST_CASE("degenerate transportation problems terminate") {
  // Uniform marginals on n points with a constant cost: every vertex is maximally degenerate.
  const std::size_t n = 12;
  lp::LinearProgram prog(2 * n - 1);
  for (std::size_t i = 0; i < n; ++i) prog.set_rhs(i, 1.0 / n);
  for (std::size_t j = 0; j + 1 < n; ++j) prog.set_rhs(n + j, 1.0 / n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::pair<std::size_t, double>> col{{i, 1.0}};
      if (j + 1 < n) col.emplace_back(n + j, 1.0);
      prog.add_variable(i == j ? 0.0 : 1.0, col);
    }
  }
  const auto s = lp::solve(prog);
  REQUIRE(s.status == lp::Status::optimal);
  CHECK(s.objective == doctest::Approx(0.0));
  check_certificates(prog, s);
}

TEST_CASE("solver is deterministic") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(7, 15, [&]() { return unif(rng); });
  Eigen::VectorXd x0 = Eigen::VectorXd::NullaryExpr(15, [&]() { return unif(rng); });
  Eigen::VectorXd c = Eigen::VectorXd::NullaryExpr(15, [&]() { return unif(rng); });
  const auto prog = from_eigen(A, A * x0, c);
  const auto a = lp::solve(prog), b = lp::solve(prog);
  CHECK(a.x == b.x);
  CHECK(a.iterations == b.iterations);
}
