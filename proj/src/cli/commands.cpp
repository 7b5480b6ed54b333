#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "martquant/cli.hpp"
#include "martquant/dual.hpp"
#include "martquant/errors.hpp"
#include "martquant/primal.hpp"

namespace martquant::cli {

namespace {

using Json = nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << text << '\n';
}

// JSON text from an inline object or a file path.
std::string json_text(const std::string& spec) {
  const auto first = spec.find_first_not_of(" \t\n");
  if (first != std::string::npos && spec[first] == '{') return spec;
  return read_file(spec);
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidInput("bad number '" + s + "' in " + what);
}

Json points(const std::vector<double>& coords, std::size_t dim) {
  if (dim == 1) return coords;
  Json arr = Json::array();
  for (std::size_t i = 0; i < coords.size() / dim; ++i)
    arr.push_back(std::vector<double>(coords.begin() + i * dim, coords.begin() + (i + 1) * dim));
  return arr;
}

std::string fmt_grid(const Quantizer& g) {
  std::string s;
  const std::size_t shown = std::min<std::size_t>(g.size(), 12);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) s += ", ";
    if (g.dim() == 1) {
      s += fmt::format("{:.6g}", g.x(i));
    } else {
      s += "(";
      for (std::size_t c = 0; c < g.dim(); ++c) s += fmt::format("{}{:.6g}", c ? ", " : "", g.point(i)[c]);
      s += ")";
    }
  }
  if (shown < g.size()) s += fmt::format(", ... ({} points)", g.size());
  return s;
}

// The result goes to --out when given (summary on `out`), else to `out` (summary on `err`).
void emit(const Json& result, const std::string& summary, const std::optional<std::string>& path,
          std::ostream& out, std::ostream& err) {
  if (path) {
    write_text(*path, result.dump(2));
    out << summary << '\n';
  } else {
    out << result.dump(2) << '\n';
    err << summary << '\n';
  }
}

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const InvalidInput*>(&e)) return kExitInput;
  if (dynamic_cast<const ConvergenceError*>(&e)) return kExitConvergence;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitConvergence;
  if (dynamic_cast<const InfeasibleError*>(&e)) return kExitInfeasible;
  return kExitFailure;
}

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"uniform01", "tri2x", "invsqrt", "mu6", "mu6check"};
  return names;
}

json::AnyMeasure load_measure(const std::string& spec) {
  std::string name = spec;
  const bool prefixed = name.rfind("builtin:", 0) == 0;
  if (prefixed) name = name.substr(8);
  if (name == "uniform01") return fixtures::uniform01();
  if (name == "tri2x") return fixtures::tri2x();
  if (name == "invsqrt") return fixtures::invsqrt();
  if (name == "mu6") return fixtures::mu6();
  if (name == "mu6check") return fixtures::mu6_check();
  if (prefixed) throw InvalidInput("unknown builtin measure '" + name + "'");
  if (name.find('{') == std::string::npos && !std::filesystem::exists(name)) {
    std::string known;
    for (const auto& b : builtin_names()) known += (known.empty() ? "" : ", ") + b;
    throw InvalidInput("'" + spec + "' is neither a builtin measure (" + known + ") nor a file");
  }
  return json::parse_measure(json_text(spec));
}

CostSpec load_cost(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "abs_power") return CostSpec::abs_power(arg.empty() ? 1.0 : parse_number(arg, "cost"));
  if (kind == "forward_call") return CostSpec::forward_call(arg.empty() ? 0.0 : parse_number(arg, "cost"));
  if (kind == "forward_put") return CostSpec::forward_put(arg.empty() ? 0.0 : parse_number(arg, "cost"));
  if (kind == "scalar_product") return CostSpec::scalar_product();
  if (spec.find('{') == std::string::npos && !std::filesystem::exists(spec))
    throw InvalidInput("unknown cost '" + spec + "'");
  return json::parse_cost(json_text(spec));
}

json::AnyMeasure affine(const json::AnyMeasure& m, double factor, double shift) {
  if (!(factor > 0.0) || !std::isfinite(factor) || !std::isfinite(shift))
    throw InvalidInput("affine map needs a positive finite factor and a finite shift");
  if (factor == 1.0 && shift == 0.0) return m;
  if (const auto* a = std::get_if<Analytic1DMeasure>(&m)) {
    if (a->family() == Analytic1DMeasure::Family::uniform)
      return Analytic1DMeasure::uniform(factor * a->lower() + shift, factor * a->upper() + shift);
    return Analytic1DMeasure::power(a->rho(), factor * a->offset() + shift, factor * a->scale());
  }
  const auto& d = std::get<DiscreteMeasure>(m);
  if (d.dim() != 1) throw InvalidInput("affine maps are only supported in dimension 1");
  return affine_image_1d(d, factor, shift);
}

DiscreteMeasure lower_discretization(const json::AnyMeasure& m, std::size_t atoms) {
  if (const auto* a = std::get_if<Analytic1DMeasure>(&m)) {
    if (atoms == 0) throw InvalidInput("atom count must be positive");
    return discretize(*a, atoms);
  }
  return std::get<DiscreteMeasure>(m);
}

DiscreteMeasure upper_discretization(const json::AnyMeasure& m, std::size_t atoms) {
  if (const auto* a = std::get_if<Analytic1DMeasure>(&m)) {
    if (atoms < 2) throw InvalidInput("the upper discretization needs at least 2 atoms");
    std::vector<double> g(atoms);
    for (std::size_t k = 0; k < atoms; ++k)
      g[k] = a->lower() + a->scale() * static_cast<double>(k) / static_cast<double>(atoms - 1);
    g.back() = a->upper();
    return dual_quantize_1d(*a, Quantizer::from_1d(g)).pushforward;
  }
  return std::get<DiscreteMeasure>(m);
}

std::size_t thread_count(std::size_t requested) {
  std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("MARTQUANT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end != cap && *end == '\0' && v > 0) n = std::min(n, static_cast<std::size_t>(v));
  }
  return n;
}

int cmd_quantize(const QuantizeArgs& args, std::ostream& out, std::ostream& err) {
  if (args.mode != "primal" && args.mode != "dual")
    throw InvalidInput("mode must be 'primal' or 'dual'");
  if (!(args.p >= 1.0)) throw InvalidInput("p must be at least 1");
  const auto measure = load_measure(args.measure);
  std::optional<Quantizer> fixed;
  if (args.grid) fixed = json::parse_quantizer(json_text(*args.grid));
  if (!fixed && args.n == 0) throw InvalidInput("give --n or --grid");

  Quantizer grid;
  std::vector<double> weights;
  double dist_p = 0.0;
  std::size_t iterations = 0;
  std::string note;
  const auto* analytic = std::get_if<Analytic1DMeasure>(&measure);
  const auto* discrete = std::get_if<DiscreteMeasure>(&measure);

  if (args.mode == "primal") {
    QuantizationResult r;
    if (fixed) {
      r = analytic ? quantize(*analytic, *fixed, args.p) : quantize(*discrete, *fixed, args.p);
    } else if (analytic) {
      r = optimal_primal_1d(*analytic, args.n);
    } else {
      LloydOptions opt;
      opt.seed = args.seed;
      r = lloyd(*discrete, args.n, opt);
    }
    grid = r.quantizer;
    weights = r.cell_weights;
    iterations = r.iterations;
    dist_p = analytic ? distortion(*analytic, grid, args.p) : distortion(*discrete, grid, args.p);
    if (!fixed && args.p != 2.0) note = " (grid optimized for p = 2)";
  } else {
    DualQuantization r;
    if (fixed && analytic) {
      r = dual_quantize_1d(*analytic, *fixed, args.p);
    } else if (fixed && discrete->dim() == 1) {
      r = dual_quantize_1d(*discrete, *fixed, args.p);
    } else if (fixed) {
      const auto [value, kernel] = dual_distortion_lp(*discrete, *fixed, args.p);
      r.grid = *fixed;
      r.grid_weights = kernel.grid_weights(*discrete);
      r.distortion_p = value;
    } else if (analytic) {
      r = args.p == 2.0 ? optimal_dual_1d_quadratic(*analytic, args.n)
                        : optimal_dual_1d(*analytic, args.n, args.p);
    } else {
      if (discrete->dim() != 1)
        throw InvalidInput("dual grid optimization is only available in dimension 1; pass --grid");
      r = optimal_dual_1d_quadratic(*discrete, args.n);
      if (args.p != 2.0) {
        r = dual_quantize_1d(*discrete, r.grid, args.p);
        note = " (grid optimized for p = 2)";
      }
    }
    grid = r.grid;
    weights = r.grid_weights;
    dist_p = r.distortion_p;
  }

  Json result = {{"mode", args.mode},
                 {"n", grid.size()},
                 {"p", args.p},
                 {"grid", points(grid.coords(), grid.dim())},
                 {"weights", weights},
                 {"distortion", std::pow(dist_p, 1.0 / args.p)},
                 {"distortion_p", dist_p}};
  if (args.mode == "primal") result["iterations"] = iterations;
  const std::string summary =
      fmt::format("{} quantization, N = {}: grid {{{}}}, {} = {:.10g}{}", args.mode, grid.size(),
                  fmt_grid(grid), args.mode == "primal" ? "e_p" : "d_p",
                  std::pow(dist_p, 1.0 / args.p), note);
  emit(result, summary, args.out, out, err);
  return kExitOk;
}

int cmd_mot(const MotArgs& args, std::ostream& out, std::ostream& err) {
  const auto mu = lower_discretization(load_measure(args.mu), args.atoms);
  const auto nu = upper_discretization(load_measure(args.nu), args.atoms);
  const auto cost = load_cost(args.cost);
  const auto bound = args.upper ? PriceBound::upper : PriceBound::lower;
  const auto r = mot_value(mu, nu, cost, bound);
  const auto& c = r.coupling.coupling();
  Json entries = Json::array();
  for (const auto& e : c.entries()) entries.push_back({{"i", e.i}, {"j", e.j}, {"w", e.w}});
  const Json result = {
      {"bound", args.upper ? "upper" : "lower"},
      {"cost", Json::parse(json::dump(cost))},
      {"value", r.value},
      {"coupling",
       {{"dim", c.dim()},
        {"src_points", points(c.source_marginal().coords(), c.dim())},
        {"dst_points", points(c.target_marginal().coords(), c.dim())},
        {"entries", entries}}}};
  const std::string summary = fmt::format("{} = {:.12g} over {} x {} atoms",
                                          args.upper ? "-V_{-c}" : "V_c", r.value, mu.size(), nu.size());
  emit(result, summary, args.out, out, err);
  return kExitOk;
}

int cmd_distance(const DistanceArgs& args, std::ostream& out, std::ostream& err) {
  if (args.metric != "w" && args.metric != "m") throw InvalidInput("metric must be 'w' or 'm'");
  if (!(args.p >= 1.0)) throw InvalidInput("p must be at least 1");
  const auto a = load_measure(args.mu), b = load_measure(args.nu);
  double value_p = 0.0;
  std::string how;
  if (args.metric == "w") {
    const auto* aa = std::get_if<Analytic1DMeasure>(&a);
    const auto* bd = std::get_if<DiscreteMeasure>(&b);
    const auto* ad = std::get_if<DiscreteMeasure>(&a);
    const auto* ba = std::get_if<Analytic1DMeasure>(&b);
    if (aa && bd && bd->dim() == 1) {
      value_p = w_p_semidiscrete_1d(*aa, *bd, args.p);
      how = "quantile coupling";
    } else if (ad && ba && ad->dim() == 1) {
      value_p = w_p_semidiscrete_1d(*ba, *ad, args.p);
      how = "quantile coupling";
    } else {
      value_p = w_p(lower_discretization(a, args.atoms), lower_discretization(b, args.atoms), args.p).value;
      how = aa || ba ? fmt::format("{}-atom discretization", args.atoms) : "exact";
    }
  } else {
    value_p = m_p(lower_discretization(a, args.atoms), upper_discretization(b, args.atoms), args.p).value;
    how = std::holds_alternative<Analytic1DMeasure>(a) || std::holds_alternative<Analytic1DMeasure>(b)
              ? fmt::format("{}-atom discretization", args.atoms)
              : "exact";
  }
  const double value = std::pow(value_p, 1.0 / args.p);
  const Json result = {{"metric", args.metric == "w" ? "W" : "M"}, {"p", args.p},
                       {"value", value}, {"value_p", value_p}, {"method", how}};
  out << result.dump(2) << '\n';
  err << fmt::format("{}_{:g} = {:.12g} ({})", args.metric == "w" ? "W" : "M", args.p, value, how) << '\n';
  return kExitOk;
}

}  // namespace martquant::cli
