#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "martquant/dual.hpp"
#include "martquant/measure.hpp"
#include "martquant/primal.hpp"
#include "martquant/transport.hpp"

namespace martquant::json {

// Text formats (all parse errors raise InvalidInput):
//   discrete measure  {"dim": d, "points": [[...], ...], "weights": [...]}
//   analytic measure  {"family": "uniform"|"power", "rho": r, "offset": a, "scale": s}
//   quantizer         {"points": [[...], ...]}
//   splitting kernel  {"grid": [[...], ...], "rows": [{"src": i, "cols": [...], "w": [...]}],
//                      "src_points": [[...], ...]}
//   coupling          {"dim": d, "src_points": [...], "dst_points": [...],
//                      "entries": [{"i": i, "j": j, "w": w}, ...]}
//   cost              {"kind": "abs_power", "p": 1} | {"kind": "matrix", "values": [[...]]} |
//                     {"kind": "forward_call"|"forward_put", "strike": k} |
//                     {"kind": "scalar_product"}
// In d = 1, points may also be given as a flat list of numbers.

using AnyMeasure = std::variant<DiscreteMeasure, Analytic1DMeasure>;

std::string dump(const DiscreteMeasure& m);
std::string dump(const Analytic1DMeasure& m);
std::string dump(const Quantizer& q);
std::string dump(const SplittingKernel& k);
std::string dump(const Coupling& c);
std::string dump(const CostSpec& c);

AnyMeasure parse_measure(std::string_view text);
DiscreteMeasure parse_discrete_measure(std::string_view text);
Quantizer parse_quantizer(std::string_view text);
SplittingKernel parse_splitting_kernel(std::string_view text);
Coupling parse_coupling(std::string_view text);
CostSpec parse_cost(std::string_view text);

}  // namespace martquant::json
