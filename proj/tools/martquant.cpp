#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "martquant/cli.hpp"
#include "martquant/errors.hpp"

namespace mc = martquant::cli;

namespace {

std::pair<double, double> parse_affine(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw martquant::InvalidInput("affine map must be 'factor,shift'");
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw martquant::InvalidInput("affine map must be 'factor,shift', got '" + s + "'");
  }
}

constexpr const char* kFooter =
    "Exit codes: 0 ok, 1 a reproduce line failed, 2 invalid input, 3 no convergence or\n"
    "numerical breakdown, 4 marginals not in convex order.\n"
    "Measures: builtin names (uniform01, tri2x, invsqrt, mu6, mu6check, optionally\n"
    "prefixed with 'builtin:'), an inline JSON object or a JSON file.\n"
    "MARTQUANT_THREADS caps the number of sweep workers.";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Primal and dual quantization for martingale optimal transport"};
  app.footer(kFooter);
  app.require_subcommand(1);

  mc::QuantizeArgs q;
  auto* quantize = app.add_subcommand("quantize", "Optimal primal or dual quantization of a measure");
  quantize->add_option("--measure", q.measure, "Builtin name, inline JSON or file")->required();
  quantize->add_option("--mode", q.mode, "primal or dual")->check(CLI::IsMember({"primal", "dual"}));
  quantize->add_option("--n", q.n, "Grid size");
  quantize->add_option("--p", q.p, "Distortion exponent");
  quantize->add_option("--grid", q.grid, "Evaluate on this grid (JSON or file) instead of optimizing");
  quantize->add_option("--seed", q.seed, "Lloyd seed for discrete measures");
  quantize->add_option("--out", q.out, "Write the result JSON here");

  mc::MotArgs m;
  auto* mot = app.add_subcommand("mot", "Martingale optimal transport value and coupling");
  mot->add_option("--mu", m.mu, "First marginal")->required();
  mot->add_option("--nu", m.nu, "Second marginal")->required();
  mot->add_option("--cost", m.cost, "abs_power:P, forward_call:K, forward_put:K, scalar_product or JSON");
  mot->add_flag("--upper", m.upper, "Report the upper bound -V_{-c}");
  mot->add_option("--atoms", m.atoms, "Discretization of analytic marginals");
  mot->add_option("--out", m.out, "Write the result JSON here");

  mc::DistanceArgs d;
  auto* distance = app.add_subcommand("distance", "W_p or M_p between two measures");
  distance->add_option("--mu", d.mu, "First measure")->required();
  distance->add_option("--nu", d.nu, "Second measure")->required();
  distance->add_option("--metric", d.metric, "w or m")->check(CLI::IsMember({"w", "m"}));
  distance->add_option("--p", d.p, "Exponent");
  distance->add_option("--atoms", d.atoms, "Discretization of analytic measures");

  mc::SweepConfig s;
  std::string mu_affine, nu_affine;
  std::optional<std::string> sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Convergence sweep over N and K, written as CSV");
  sweep->add_option("--mu", s.mu, "First marginal")->required();
  sweep->add_option("--nu", s.nu, "Second marginal")->required();
  sweep->add_option("--mu-affine", mu_affine, "factor,shift applied to mu");
  sweep->add_option("--nu-affine", nu_affine, "factor,shift applied to nu");
  sweep->add_option("--cost", s.cost, "Cost specification");
  sweep->add_option("--n", s.n_values, "Primal grid sizes")->delimiter(',');
  sweep->add_option("--k", s.k_values, "Dual grid sizes (default: K = N)")->delimiter(',');
  sweep->add_option("--p", s.p, "Exponent of the dual distortion and coupling metrics");
  sweep->add_option("--atoms", s.atoms, "Discretization of analytic marginals");
  sweep->add_flag("--reference", s.reference, "Add |V - V_ref| against the discretized marginals");
  sweep->add_flag("--coupling-metrics", s.coupling_metrics, "Add W_p and AW_p between the couplings");
  sweep->add_option("--threads", s.threads, "Worker count (0: hardware concurrency)");
  sweep->add_option("--out", sweep_out, "Write the CSV here instead of stdout");

  mc::ReproduceOptions r;
  bool coarse = false, as_json = false;
  auto* reproduce = app.add_subcommand("reproduce", "Recompute the worked-example constants");
  reproduce->add_option("--atoms", r.atoms, "Discretization used for the W_2^2 line");
  reproduce->add_flag("--coarse", coarse, "Use an 8-atom discretization (the W_2^2 line then fails)");
  reproduce->add_flag("--json", as_json, "Machine-readable report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mc::kExitInput;
  }

  try {
    if (*quantize) return mc::cmd_quantize(q, std::cout, std::cerr);
    if (*mot) return mc::cmd_mot(m, std::cout, std::cerr);
    if (*distance) return mc::cmd_distance(d, std::cout, std::cerr);
    if (*sweep) {
      if (!mu_affine.empty()) std::tie(s.mu_factor, s.mu_shift) = parse_affine(mu_affine);
      if (!nu_affine.empty()) std::tie(s.nu_factor, s.nu_shift) = parse_affine(nu_affine);
      const auto report = mc::run_sweep(s);
      if (sweep_out) {
        std::ofstream f(*sweep_out);
        if (!f) throw martquant::InvalidInput("cannot write '" + *sweep_out + "'");
        mc::write_csv(report, f);
      } else {
        mc::write_csv(report, std::cout);
      }
      if (std::isfinite(report.reference)) std::cerr << fmt::format("V_ref = {:.12g}\n", report.reference);
      for (const auto& [label, f] : {std::pair{"e_2,N", report.e2_slope}, std::pair{"d_p,K", report.dp_slope}})
        std::cerr << fmt::format("log-log slope of {}: {:.4f} (rms residual {:.2e}, {} points)\n", label,
                                 f.slope, f.residual, f.points);
      bool failed = false;
      for (const auto& row : report.rows) failed = failed || row.status != "ok";
      return failed ? mc::kExitFailure : mc::kExitOk;
    }
    if (coarse) r.atoms = 8;
    const auto lines = mc::reproduce_report(r);
    mc::print_report(lines, as_json, std::cout);
    for (const auto& l : lines)
      if (!l.pass) return mc::kExitFailure;
    return mc::kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mc::exit_code_for(e);
  }
}
