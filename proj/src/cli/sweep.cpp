#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "martquant/cli.hpp"
#include "martquant/coupling.hpp"
#include "martquant/dual.hpp"
#include "martquant/errors.hpp"
#include "martquant/primal.hpp"

namespace martquant::cli {

namespace {

std::string status_for(const std::exception& e) {
  std::string kind = "error";
  switch (exit_code_for(e)) {
    case kExitInput: kind = "invalid_input"; break;
    case kExitConvergence: kind = "no_convergence"; break;
    case kExitInfeasible: kind = "infeasible"; break;
    default: break;
  }
  return kind + ": " + e.what();
}

// e_{2,N}(μ): exact for analytic laws, Lloyd otherwise.
double primal_error(const json::AnyMeasure& m, std::size_t n) {
  if (const auto* a = std::get_if<Analytic1DMeasure>(&m)) {
    const auto r = optimal_primal_1d(*a, n);
    return std::sqrt(distortion(*a, r.quantizer, 2.0));
  }
  const auto& d = std::get<DiscreteMeasure>(m);
  return std::sqrt(distortion(d, lloyd(d, n).quantizer, 2.0));
}

// d_{p,K}(ν) on a quadratic-optimal dual grid.
double dual_error(const json::AnyMeasure& m, std::size_t k, double p) {
  if (const auto* a = std::get_if<Analytic1DMeasure>(&m)) {
    const auto r = p == 2.0 ? optimal_dual_1d_quadratic(*a, k) : optimal_dual_1d(*a, k, p);
    return std::pow(r.distortion_p, 1.0 / p);
  }
  const auto& d = std::get<DiscreteMeasure>(m);
  if (d.dim() != 1) throw InvalidInput("dual grid optimization is only available in dimension 1");
  const auto grid = optimal_dual_1d_quadratic(d, k).grid;
  return std::pow(dual_quantize_1d(d, grid, p).distortion_p, 1.0 / p);
}

std::string cell(double v) { return std::isfinite(v) ? fmt::format("{:.12g}", v) : std::string(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + '"';
}

}  // namespace

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i]))
      pts.emplace_back(std::log(x[i]), std::log(y[i]));
  SlopeFit f;
  f.points = pts.size();
  if (pts.size() < 2) return f;
  double mx = 0.0, my = 0.0;
  for (const auto& [a, b] : pts) mx += a, my += b;
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [a, b] : pts) sxx += (a - mx) * (a - mx), sxy += (a - mx) * (b - my);
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (const auto& [a, b] : pts) ss += std::pow(b - f.intercept - f.slope * a, 2);
  f.residual = std::sqrt(ss / static_cast<double>(pts.size()));
  return f;
}

SweepReport run_sweep(const SweepConfig& cfg) {
  if (cfg.n_values.empty()) throw InvalidInput("the N list is empty");
  if (!cfg.k_values.empty() && cfg.k_values.size() != cfg.n_values.size() && cfg.k_values.size() != 1)
    throw InvalidInput("the K list must be empty, of length 1, or as long as the N list");
  if (!(cfg.p >= 1.0)) throw InvalidInput("p must be at least 1");
  const auto mu = affine(load_measure(cfg.mu), cfg.mu_factor, cfg.mu_shift);
  const auto nu = affine(load_measure(cfg.nu), cfg.nu_factor, cfg.nu_shift);
  const auto cost = load_cost(cfg.cost);
  const auto mu_d = lower_discretization(mu, cfg.atoms);
  const auto nu_d = upper_discretization(nu, cfg.atoms);

  SweepReport report;
  std::optional<MartingaleTransportResult> ref;
  if (cfg.reference || cfg.coupling_metrics) {
    ref = mot_value(mu_d, nu_d, cost);
    report.reference = ref->value;
  }

  std::vector<std::pair<std::size_t, std::size_t>> shape;
  for (std::size_t i = 0; i < cfg.n_values.size(); ++i) {
    const std::size_t k = cfg.k_values.empty() ? cfg.n_values[i]
                          : cfg.k_values.size() == 1 ? cfg.k_values[0]
                                                     : cfg.k_values[i];
    if (cfg.n_values[i] == 0 || k < 2) throw InvalidInput("need N ≥ 1 and K ≥ 2");
    shape.emplace_back(cfg.n_values[i], k);
  }
  std::sort(shape.begin(), shape.end());
  report.rows.resize(shape.size());

  auto run_row = [&](std::size_t idx) {
    auto& row = report.rows[idx];
    std::tie(row.n, row.k) = shape[idx];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      row.e2 = primal_error(mu, row.n);
      row.dp = dual_error(nu, row.k, cfg.p);
      if (nu_d.dim() != 1) throw InvalidInput("the sweep needs 1D marginals");
      const auto gamma = lloyd(mu_d, row.n).quantizer;
      const auto q = optimal_dual_1d_quadratic(nu_d, row.k);
      const auto mu_hat = quantize(mu_d, gamma).pushforward;
      row.value = mot_value(mu_hat, q.pushforward, cost).value;
      if (cfg.reference) row.gap = std::abs(row.value - report.reference);
      if (cfg.coupling_metrics) {
        const auto b = build_pi_bar(ref->coupling, gamma, *q.kernel, cfg.p);
        row.w = coupling_distance_w_p(b.pi_bar, ref->coupling, cfg.p);
        row.aw = aw_p(b.pi_bar, ref->coupling, cfg.p);
      }
    } catch (const std::exception& e) {
      row.status = status_for(e);
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const std::size_t workers = std::min(thread_count(cfg.threads), shape.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < shape.size(); i = next++) run_row(i);
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::map<double, double> e2_by_n, dp_by_k;
  for (const auto& r : report.rows) {
    e2_by_n.emplace(static_cast<double>(r.n), r.e2);
    dp_by_k.emplace(static_cast<double>(r.k), r.dp);
  }
  auto fit = [](const std::map<double, double>& m) {
    std::vector<double> x, y;
    for (const auto& [a, b] : m) x.push_back(a), y.push_back(b);
    return fit_loglog(x, y);
  };
  report.e2_slope = fit(e2_by_n);
  report.dp_slope = fit(dp_by_k);
  return report;
}

void write_csv(const SweepReport& r, std::ostream& out) {
  out << "N,K,e2_N,dp_K,V,V_gap,W_p,AW_p,seconds,status\n";
  for (const auto& row : r.rows)
    out << fmt::format("{},{},{},{},{},{},{},{},{:.3f},{}\n", row.n, row.k, cell(row.e2), cell(row.dp),
                       cell(row.value), cell(row.gap), cell(row.w), cell(row.aw), row.seconds,
                       csv_field(row.status));
}

}  // namespace martquant::cli
