#include "martquant/json_io.hpp"

#include <algorithm>

#include <json.hpp>

#include "martquant/errors.hpp"

namespace martquant::json {

namespace {

using nlohmann::json;

json points_json(std::size_t dim, const std::vector<double>& coords) {
  json pts = json::array();
  for (std::size_t i = 0; i < coords.size() / dim; ++i) {
    pts.push_back(std::vector<double>(coords.begin() + i * dim, coords.begin() + (i + 1) * dim));
  }
  return pts;
}

json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed JSON: ") + e.what());
  }
}

template <class T>
T get(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidInput(std::string("missing JSON field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("bad JSON field '") + key + "': " + e.what());
  }
}

// Accepts [[x, y], ...] or, in 1D, [x, ...]. Returns flat coordinates and sets `dim`.
std::vector<double> read_points(const json& arr, std::size_t& dim, const char* what) {
  if (!arr.is_array()) throw InvalidInput(std::string(what) + " must be an array");
  std::vector<double> flat;
  std::size_t found = 0;
  for (const auto& p : arr) {
    std::size_t here = 1;
    if (p.is_number()) {
      flat.push_back(p.get<double>());
    } else if (p.is_array()) {
      here = p.size();
      for (const auto& c : p) {
        if (!c.is_number()) throw InvalidInput(std::string(what) + " entries must be numbers");
        flat.push_back(c.get<double>());
      }
    } else {
      throw InvalidInput(std::string(what) + " entries must be numbers or arrays");
    }
    if (here == 0) throw InvalidInput(std::string(what) + " has an empty point");
    if (found != 0 && here != found) throw InvalidInput(std::string(what) + " mixes dimensions");
    found = here;
  }
  if (found == 0) found = dim == 0 ? 1 : dim;
  if (dim != 0 && dim != found) throw InvalidInput(std::string(what) + " does not match \"dim\"");
  dim = found;
  return flat;
}

json measure_json(const DiscreteMeasure& m) {
  return {{"dim", m.dim()}, {"points", points_json(m.dim(), m.coords())}, {"weights", m.weights()}};
}

DiscreteMeasure discrete_from(const json& j) {
  std::size_t dim = j.contains("dim") ? get<std::size_t>(j, "dim") : 0;
  if (!j.contains("points")) throw InvalidInput("missing JSON field 'points'");
  auto coords = read_points(j.at("points"), dim, "points");
  auto weights = get<std::vector<double>>(j, "weights");
  if (coords.size() != weights.size() * dim) throw InvalidInput("points and weights differ in length");
  return DiscreteMeasure(dim, std::move(coords), std::move(weights));
}

Analytic1DMeasure analytic_from(const json& j) {
  const auto family = get<std::string>(j, "family");
  const double offset = j.contains("offset") ? get<double>(j, "offset") : 0.0;
  const double scale = j.contains("scale") ? get<double>(j, "scale") : 1.0;
  if (family == "uniform") return Analytic1DMeasure::uniform(offset, offset + scale);
  if (family == "power") return Analytic1DMeasure::power(get<double>(j, "rho"), offset, scale);
  throw InvalidInput("unknown analytic family '" + family + "'");
}

}  // namespace

std::string dump(const DiscreteMeasure& m) { return measure_json(m).dump(); }

std::string dump(const Analytic1DMeasure& m) {
  json j{{"family", m.family() == Analytic1DMeasure::Family::uniform ? "uniform" : "power"},
         {"rho", m.rho()},
         {"offset", m.offset()},
         {"scale", m.scale()}};
  return j.dump();
}

std::string dump(const Quantizer& q) { return json{{"points", points_json(q.dim(), q.coords())}}.dump(); }

std::string dump(const SplittingKernel& k) {
  json rows = json::array();
  for (std::size_t r = 0; r < k.size(); ++r) {
    rows.push_back({{"src", r}, {"cols", k.row(r).cols}, {"w", k.row(r).w}});
  }
  const std::size_t d = k.grid().dim();
  return json{{"grid", points_json(d, k.grid().coords())},
              {"rows", rows},
              {"src_points", points_json(d, k.sources())}}
      .dump();
}

std::string dump(const Coupling& c) {
  json entries = json::array();
  for (const auto& e : c.entries()) entries.push_back({{"i", e.i}, {"j", e.j}, {"w", e.w}});
  return json{{"dim", c.dim()},
              {"src_points", points_json(c.dim(), c.source_marginal().coords())},
              {"dst_points", points_json(c.dim(), c.target_marginal().coords())},
              {"entries", entries}}
      .dump();
}

std::string dump(const CostSpec& c) {
  json j;
  switch (c.kind) {
    case CostSpec::Kind::abs_power:
      j = {{"kind", "abs_power"}, {"p", c.p}};
      break;
    case CostSpec::Kind::forward_call:
      j = {{"kind", "forward_call"}, {"strike", c.strike}};
      break;
    case CostSpec::Kind::forward_put:
      j = {{"kind", "forward_put"}, {"strike", c.strike}};
      break;
    case CostSpec::Kind::scalar_product:
      j = {{"kind", "scalar_product"}};
      break;
    case CostSpec::Kind::matrix:
      j = {{"kind", "matrix"}, {"values", c.values}};
      break;
  }
  return j.dump();
}

AnyMeasure parse_measure(std::string_view text) {
  const json j = parse(text);
  if (j.is_object() && j.contains("family")) return analytic_from(j);
  return discrete_from(j);
}

DiscreteMeasure parse_discrete_measure(std::string_view text) { return discrete_from(parse(text)); }

Quantizer parse_quantizer(std::string_view text) {
  const json j = parse(text);
  if (!j.is_object() || !j.contains("points")) throw InvalidInput("missing JSON field 'points'");
  std::size_t dim = 0;
  auto coords = read_points(j.at("points"), dim, "points");
  return Quantizer(dim, std::move(coords));
}

SplittingKernel parse_splitting_kernel(std::string_view text) {
  const json j = parse(text);
  if (!j.is_object() || !j.contains("grid") || !j.contains("rows") || !j.contains("src_points")) {
    throw InvalidInput("a splitting kernel needs 'grid', 'rows' and 'src_points'");
  }
  std::size_t dim = 0;
  auto grid = read_points(j.at("grid"), dim, "grid");
  auto src = read_points(j.at("src_points"), dim, "src_points");
  const std::size_t n = src.size() / dim;
  std::vector<SplittingKernel::Row> rows(n);
  std::vector<bool> seen(n, false);
  for (const auto& r : j.at("rows")) {
    const auto i = get<std::size_t>(r, "src");
    if (i >= n || seen[i]) throw InvalidInput("kernel row 'src' index is out of range or repeated");
    seen[i] = true;
    rows[i].cols = get<std::vector<std::size_t>>(r, "cols");
    rows[i].w = get<std::vector<double>>(r, "w");
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw InvalidInput("every source point needs a kernel row");
  }
  return SplittingKernel(Quantizer(dim, std::move(grid)), std::move(src), std::move(rows));
}

Coupling parse_coupling(std::string_view text) {
  const json j = parse(text);
  std::size_t dim = j.contains("dim") ? get<std::size_t>(j, "dim") : 0;
  if (!j.contains("src_points") || !j.contains("dst_points")) {
    throw InvalidInput("a coupling needs 'src_points' and 'dst_points'");
  }
  auto src = read_points(j.at("src_points"), dim, "src_points");
  auto dst = read_points(j.at("dst_points"), dim, "dst_points");
  std::vector<CouplingEntry> entries;
  if (!j.contains("entries") || !j.at("entries").is_array()) throw InvalidInput("missing JSON field 'entries'");
  for (const auto& e : j.at("entries")) {
    entries.push_back({get<std::size_t>(e, "i"), get<std::size_t>(e, "j"), get<double>(e, "w")});
  }
  return Coupling(dim, src, dst, std::move(entries));
}

CostSpec parse_cost(std::string_view text) {
  const json j = parse(text);
  const auto kind = get<std::string>(j, "kind");
  if (kind == "abs_power") return CostSpec::abs_power(get<double>(j, "p"));
  if (kind == "forward_call") return CostSpec::forward_call(j.contains("strike") ? get<double>(j, "strike") : 0.0);
  if (kind == "forward_put") return CostSpec::forward_put(j.contains("strike") ? get<double>(j, "strike") : 0.0);
  if (kind == "scalar_product") return CostSpec::scalar_product();
  if (kind == "matrix") return CostSpec::matrix(get<std::vector<std::vector<double>>>(j, "values"));
  throw InvalidInput("unknown cost kind '" + kind + "'");
}

}  // namespace martquant::json
