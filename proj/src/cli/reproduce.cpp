#include <algorithm>
#include <cmath>
#include <ostream>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "martquant/cli.hpp"
#include "martquant/dual.hpp"
#include "martquant/primal.hpp"

namespace martquant::cli {

namespace {

ReportLine close_to(std::string name, double computed, double expected, double tolerance,
                    std::string detail = {}) {
  return {std::move(name), computed, expected, tolerance,
          std::abs(computed - expected) <= tolerance, std::move(detail)};
}

double integral(const DiscreteMeasure& m, double (*f)(double)) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m.weight(i) * f(m.x(i));
  return s;
}

double pos(double x) { return x > 0.0 ? x : 0.0; }
double phi1(double x) { return pos(0.4 - x) * pos(0.4 - x); }
double phi2(double x) { return pos(x - 0.4) * pos(x - 0.4) - pos(x - 0.6) * pos(x - 0.6); }

}  // namespace

std::vector<ReportLine> reproduce_report(const ReproduceOptions& opt) {
  std::vector<ReportLine> lines;
  const auto unif = fixtures::uniform01();
  const auto tri = fixtures::tri2x();

  lines.push_back(close_to("inverse-sqrt grid factor c_2", sqrt_density_coefficients(2)[2],
                           (std::sqrt(17.0) - 1.0) / 2.0, 1e-12));

  constexpr std::size_t kN = 5;
  const auto primal = optimal_primal_1d(unif, kN).quantizer;
  for (double p : {1.0, 2.0, 3.0})
    lines.push_back(close_to(fmt::format("uniform primal e_{{{:g},{}}}", p, kN),
                             std::pow(distortion(unif, primal, p), 1.0 / p),
                             1.0 / (2.0 * std::pow(p + 1.0, 1.0 / p) * kN), 1e-9));
  for (double p : {1.0, 2.0, 3.0}) {
    const auto r = p == 2.0 ? optimal_dual_1d_quadratic(unif, kN) : optimal_dual_1d(unif, kN, p);
    lines.push_back(close_to(fmt::format("uniform dual d_{{{:g},{}}}", p, kN),
                             std::pow(r.distortion_p, 1.0 / p),
                             std::pow(2.0 / ((p + 1.0) * (p + 2.0)), 1.0 / p) / (kN - 1), 1e-6));
  }

  const auto tri_dual = optimal_dual_1d_quadratic(tri, 3);
  lines.push_back(close_to("density 2x: interior dual grid point", tri_dual.grid.x(1),
                           1.0 / std::sqrt(3.0), 1e-6,
                           fmt::format("grid {{{:.8g}, {:.8g}, {:.8g}}}", tri_dual.grid.x(0),
                                       tri_dual.grid.x(1), tri_dual.grid.x(2))));
  lines.push_back(close_to("density 2x: d_{2,3}^2", tri_dual.distortion_p,
                           1.0 / 6.0 - 2.0 / std::pow(3.0, 2.5), 1e-8));

  const auto nu_third = fixtures::tri2x_dual_family(1.0 / 3.0);
  lines.push_back(close_to("density 2x: W_2^2(mu, nu_{1/3})",
                           w_p(discretize(tri, opt.atoms), nu_third, 2.0).value, 0.0199758, 2e-4,
                           fmt::format("{}-atom discretization of mu", opt.atoms)));

  const auto argmin = boost::math::tools::brent_find_minima(
      [&](double u) { return w_p_semidiscrete_1d(tri, fixtures::tri2x_dual_family(u), 2.0); }, 0.2,
      0.5, 40);
  lines.push_back(close_to("density 2x: argmin_u W_2^2(mu, nu_u)", argmin.first, 0.326, 1e-3,
                           fmt::format("minimum {:.10g}", argmin.second)));

  const auto mu6 = fixtures::mu6(), mu6c = fixtures::mu6_check();
  lines.push_back(close_to("mu6 <=cvx mu6check feasible", convex_order_feasible(mu6, mu6c), 0.0, 0.0));
  lines.push_back(close_to("mu6check <=cvx mu6 feasible", convex_order_feasible(mu6c, mu6), 0.0, 0.0));
  const double d1 = integral(mu6, phi1) - integral(mu6c, phi1);
  const double d2 = integral(mu6, phi2) - integral(mu6c, phi2);
  lines.push_back({"mu6 vs mu6check: test-function differences have opposite signs", d1 * d2, NAN, NAN,
                   d1 * d2 < 0.0, fmt::format("phi1 {:+.6g}, phi2 {:+.6g}", d1, d2)});
  return lines;
}

void print_report(const std::vector<ReportLine>& lines, bool as_json, std::ostream& out) {
  bool all = true;
  for (const auto& l : lines) all = all && l.pass;
  if (as_json) {
    using Json = nlohmann::json;
    auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    Json arr = Json::array();
    for (const auto& l : lines)
      arr.push_back({{"name", l.name}, {"computed", num(l.computed)}, {"expected", num(l.expected)},
                     {"tolerance", num(l.tolerance)}, {"pass", l.pass}, {"detail", l.detail}});
    out << Json{{"lines", arr}, {"all_pass", all}}.dump(2) << '\n';
    return;
  }
  for (const auto& l : lines) {
    std::string body = fmt::format("{} {}: computed {:.10g}", l.pass ? "PASS" : "FAIL", l.name, l.computed);
    if (std::isfinite(l.expected)) body += fmt::format(", expected {:.10g} ± {:.1e}", l.expected, l.tolerance);
    if (!l.detail.empty()) body += " (" + l.detail + ")";
    out << body << '\n';
  }
  out << fmt::format("{} of {} lines pass\n", std::count_if(lines.begin(), lines.end(),
                                                              [](const ReportLine& l) { return l.pass; }),
                     lines.size());
}

}  // namespace martquant::cli
