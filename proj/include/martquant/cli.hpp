#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "martquant/json_io.hpp"
#include "martquant/transport.hpp"

namespace martquant::cli {

// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // reproduce: at least one line failed
inline constexpr int kExitInput = 2;
inline constexpr int kExitConvergence = 3;
inline constexpr int kExitInfeasible = 4;

/// Maps a library exception to its exit code.
int exit_code_for(const std::exception& e) noexcept;

/// Builtin names accepted wherever a measure is expected (with or without a "builtin:" prefix).
const std::vector<std::string>& builtin_names();

/// Resolves a builtin name, an inline JSON object or the path of a JSON file.
json::AnyMeasure load_measure(const std::string& spec);
/// Resolves "abs_power:P", "forward_call:K", "forward_put:K", "scalar_product",
/// an inline JSON object or the path of a JSON file.
CostSpec load_cost(const std::string& spec);

/// x ↦ factor·x + shift applied to either kind of measure; factor must be positive.
json::AnyMeasure affine(const json::AnyMeasure& m, double factor, double shift);

/// Discrete stand-in lying below the law in convex order: conditional means of
/// `atoms` equal-mass quantile cells for analytic laws, the measure itself otherwise.
DiscreteMeasure lower_discretization(const json::AnyMeasure& m, std::size_t atoms);
/// Discrete stand-in lying above the law in convex order: dual image onto `atoms`
/// equally spaced points of the support for analytic laws, the measure itself otherwise.
DiscreteMeasure upper_discretization(const json::AnyMeasure& m, std::size_t atoms);

/// Worker count: `requested` if nonzero, else the hardware concurrency, capped by MARTQUANT_THREADS.
std::size_t thread_count(std::size_t requested);

struct QuantizeArgs {
  std::string measure;
  std::string mode = "primal";  // primal | dual
  std::size_t n = 0;
  double p = 2.0;
  std::optional<std::string> grid;  // evaluate on a fixed grid instead of optimizing
  std::optional<std::string> out;
  std::uint64_t seed = 0x5eed;
};

struct MotArgs {
  std::string mu, nu;
  std::string cost = "abs_power:1";
  bool upper = false;
  std::size_t atoms = 128;  // per analytic marginal; the LP has atoms² columns
  std::optional<std::string> out;
};

struct DistanceArgs {
  std::string mu, nu;
  std::string metric = "w";  // w | m
  double p = 2.0;
  std::size_t atoms = 2000;
};

// Each command writes its result to `out`, diagnostics to `err`, and returns an exit code.
int cmd_quantize(const QuantizeArgs& args, std::ostream& out, std::ostream& err);
int cmd_mot(const MotArgs& args, std::ostream& out, std::ostream& err);
int cmd_distance(const DistanceArgs& args, std::ostream& out, std::ostream& err);

struct SweepConfig {
  std::string mu, nu;
  double mu_factor = 1.0, mu_shift = 0.0;
  double nu_factor = 1.0, nu_shift = 0.0;
  std::string cost = "abs_power:1";
  std::vector<std::size_t> n_values{4, 8, 16, 32, 64};
  std::vector<std::size_t> k_values;  // empty: K = N row by row
  double p = 2.0;
  std::size_t atoms = 256;
  bool reference = false;         // add |V − V(μ_atoms, ν_atoms)|
  bool coupling_metrics = false;  // add W_p(π̄, π) and AW_p(π̄, π)
  std::size_t threads = 0;
};

struct SweepRow {
  std::size_t n = 0, k = 0;
  double e2 = NAN;      // e_{2,N}(μ)
  double dp = NAN;      // d_{p,K}(ν)
  double value = NAN;   // V(μ̂^N, ν̌^K)
  double gap = NAN;     // |V − V_ref| when requested
  double w = NAN;       // W_p(π̄^{N,K}, π)
  double aw = NAN;      // AW_p(π̄^{N,K}, π)
  double seconds = 0.0;
  std::string status = "ok";
};

struct SlopeFit {
  double slope = NAN, intercept = NAN;
  double residual = NAN;  // root mean square of the log-log fit residuals
  std::size_t points = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // sorted by (N, K)
  double reference = NAN;
  SlopeFit e2_slope, dp_slope;
};

/// Least-squares fit of log y against log x over the finite positive pairs.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

SweepReport run_sweep(const SweepConfig& cfg);
/// Header N,K,e2_N,dp_K,V,V_gap,W_p,AW_p,seconds,status; '.' decimals, LF endings,
/// empty cells for quantities not computed.
void write_csv(const SweepReport& r, std::ostream& out);

struct ReproduceOptions {
  std::size_t atoms = 2000;  // discretization used for the W_2² comparison
};

struct ReportLine {
  std::string name;
  double computed = NAN;
  double expected = NAN;
  double tolerance = NAN;
  bool pass = false;
  std::string detail;
};

std::vector<ReportLine> reproduce_report(const ReproduceOptions& opt);
void print_report(const std::vector<ReportLine>& lines, bool as_json, std::ostream& out);

}  // namespace martquant::cli
