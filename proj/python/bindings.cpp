#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "martquant/coupling.hpp"
#include "martquant/errors.hpp"
#include "martquant/json_io.hpp"

namespace py = pybind11;
using namespace martquant;

namespace {

std::vector<std::vector<double>> rows_of(std::size_t dim, const std::vector<double>& coords) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i + dim <= coords.size(); i += dim)
    out.emplace_back(coords.begin() + i, coords.begin() + i + dim);
  return out;
}

// Accepts a flat list of 1D points or a list of equal-length points.
std::pair<std::size_t, std::vector<double>> flatten(const py::sequence& pts) {
  std::vector<double> flat;
  std::size_t dim = 1;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    py::handle h = pts[i];
    if (py::isinstance<py::sequence>(h)) {
      const auto row = h.cast<std::vector<double>>();
      if (i == 0) dim = row.size();
      if (row.size() != dim || dim == 0) throw InvalidInput("points must all have the same positive dimension");
      flat.insert(flat.end(), row.begin(), row.end());
    } else {
      flat.push_back(h.cast<double>());
    }
  }
  return {dim, flat};
}

}  // namespace

PYBIND11_MODULE(_martquant, m) {
  m.doc() = "Primal and dual quantization, optimal and martingale transport";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<DiscreteMeasure>(m, "DiscreteMeasure")
      .def(py::init([](const py::sequence& points, std::vector<double> weights) {
             auto [dim, flat] = flatten(points);
             return DiscreteMeasure(dim, std::move(flat), std::move(weights));
           }),
           py::arg("points"), py::arg("weights"))
      .def_static("dirac", &DiscreteMeasure::dirac)
      .def_property_readonly("dim", &DiscreteMeasure::dim)
      .def_property_readonly("weights", &DiscreteMeasure::weights)
      .def_property_readonly("points", [](const DiscreteMeasure& d) {
        return d.dim() == 1 ? py::cast(d.coords()) : py::cast(rows_of(d.dim(), d.coords()));
      })
      .def("mean", &DiscreteMeasure::mean)
      .def("second_moment", &DiscreteMeasure::second_moment)
      .def("__len__", &DiscreteMeasure::size)
      .def("to_json", [](const DiscreteMeasure& d) { return json::dump(d); })
      .def("__repr__", [](const DiscreteMeasure& d) {
        return "DiscreteMeasure(dim=" + std::to_string(d.dim()) + ", atoms=" + std::to_string(d.size()) + ")";
      });

  py::class_<Analytic1DMeasure>(m, "Analytic1DMeasure")
      .def_static("uniform", &Analytic1DMeasure::uniform, py::arg("lo"), py::arg("hi"))
      .def_static("power", &Analytic1DMeasure::power, py::arg("rho"), py::arg("offset") = 0.0,
                  py::arg("scale") = 1.0)
      .def_property_readonly("lower", &Analytic1DMeasure::lower)
      .def_property_readonly("upper", &Analytic1DMeasure::upper)
      .def_property_readonly("rho", &Analytic1DMeasure::rho)
      .def("cdf", &Analytic1DMeasure::cdf)
      .def("quantile", &Analytic1DMeasure::quantile)
      .def("density", &Analytic1DMeasure::density)
      .def("mean", &Analytic1DMeasure::mean)
      .def("second_moment", &Analytic1DMeasure::second_moment)
      .def("to_json", [](const Analytic1DMeasure& a) { return json::dump(a); });

  py::class_<Quantizer>(m, "Quantizer")
      .def(py::init([](const py::sequence& points) {
             auto [dim, flat] = flatten(points);
             return Quantizer(dim, std::move(flat));
           }),
           py::arg("points"))
      .def_property_readonly("dim", &Quantizer::dim)
      .def_property_readonly("points", [](const Quantizer& q) {
        return q.dim() == 1 ? py::cast(q.coords()) : py::cast(rows_of(q.dim(), q.coords()));
      })
      .def("__len__", &Quantizer::size);

  py::class_<Coupling>(m, "Coupling")
      .def_property_readonly("source_marginal", &Coupling::source_marginal)
      .def_property_readonly("target_marginal", &Coupling::target_marginal)
      .def_property_readonly("entries", [](const Coupling& c) {
        std::vector<std::tuple<std::size_t, std::size_t, double>> e;
        for (const auto& x : c.entries()) e.emplace_back(x.i, x.j, x.w);
        return e;
      })
      .def("martingale_residual", &Coupling::martingale_residual)
      .def("to_json", [](const Coupling& c) { return json::dump(c); });

  py::class_<SplittingKernel>(m, "SplittingKernel")
      .def_property_readonly("grid", &SplittingKernel::grid)
      .def("grid_weights", &SplittingKernel::grid_weights)
      .def("cost", &SplittingKernel::cost);

  py::class_<QuantizationResult>(m, "QuantizationResult")
      .def_readonly("quantizer", &QuantizationResult::quantizer)
      .def_readonly("cell_weights", &QuantizationResult::cell_weights)
      .def_readonly("pushforward", &QuantizationResult::pushforward)
      .def_readonly("distortion_p", &QuantizationResult::distortion_p)
      .def_readonly("iterations", &QuantizationResult::iterations);

  py::class_<DualQuantization>(m, "DualQuantization")
      .def_readonly("grid", &DualQuantization::grid)
      .def_readonly("grid_weights", &DualQuantization::grid_weights)
      .def_readonly("pushforward", &DualQuantization::pushforward)
      .def_readonly("distortion_p", &DualQuantization::distortion_p)
      .def_readonly("kernel", &DualQuantization::kernel);

  py::class_<CostSpec>(m, "CostSpec")
      .def_static("abs_power", &CostSpec::abs_power, py::arg("p"))
      .def_static("forward_call", &CostSpec::forward_call, py::arg("strike") = 0.0)
      .def_static("forward_put", &CostSpec::forward_put, py::arg("strike") = 0.0)
      .def_static("scalar_product", &CostSpec::scalar_product)
      .def_static("matrix", &CostSpec::matrix);

  py::enum_<PriceBound>(m, "PriceBound").value("lower", PriceBound::lower).value("upper", PriceBound::upper);

  auto value_and_coupling = [](const auto& r) { return std::make_pair(r.value, Coupling(r.coupling)); };

  m.def("discretize", &discretize, py::arg("measure"), py::arg("n"));
  m.def("convex_order_leq_1d", &convex_order_leq_1d, py::arg("mu"), py::arg("nu"),
        py::arg("tolerance") = tol::kConvexOrder);
  m.def("convex_order_feasible", &convex_order_feasible, py::arg("mu"), py::arg("nu"));

  m.def("distortion", py::overload_cast<const DiscreteMeasure&, const Quantizer&, double>(&distortion),
        py::arg("mu"), py::arg("grid"), py::arg("p") = 2.0);
  m.def("distortion", py::overload_cast<const Analytic1DMeasure&, const Quantizer&, double>(&distortion),
        py::arg("mu"), py::arg("grid"), py::arg("p") = 2.0);
  m.def("quantize", py::overload_cast<const DiscreteMeasure&, const Quantizer&, double>(&quantize),
        py::arg("mu"), py::arg("grid"), py::arg("p") = 2.0);
  m.def("quantize", py::overload_cast<const Analytic1DMeasure&, const Quantizer&, double>(&quantize),
        py::arg("mu"), py::arg("grid"), py::arg("p") = 2.0);
  m.def(
      "lloyd",
      [](const DiscreteMeasure& mu, std::size_t n, std::uint64_t seed) {
        LloydOptions opt;
        opt.seed = seed;
        return lloyd(mu, n, opt);
      },
      py::arg("mu"), py::arg("n"), py::arg("seed") = 0x5eed);
  m.def("optimal_primal_1d", &optimal_primal_1d, py::arg("mu"), py::arg("n"), py::arg("tol") = 1e-12);
  m.def("sqrt_density_grid", &sqrt_density_grid, py::arg("n"), py::arg("a") = 0.0, py::arg("b") = 1.0);

  m.def("dual_quantize_1d",
        py::overload_cast<const DiscreteMeasure&, const Quantizer&, double>(&dual_quantize_1d),
        py::arg("mu"), py::arg("grid"), py::arg("p") = 2.0);
  m.def("dual_quantize_1d",
        py::overload_cast<const Analytic1DMeasure&, const Quantizer&, double>(&dual_quantize_1d),
        py::arg("mu"), py::arg("grid"), py::arg("p") = 2.0);
  m.def(
      "optimal_dual_1d_quadratic",
      [](const DiscreteMeasure& mu, std::size_t n) { return optimal_dual_1d_quadratic(mu, n); },
      py::arg("mu"), py::arg("n"));
  m.def(
      "optimal_dual_1d_quadratic",
      [](const Analytic1DMeasure& mu, std::size_t n) { return optimal_dual_1d_quadratic(mu, n); },
      py::arg("mu"), py::arg("n"));
  m.def(
      "optimal_dual_1d", [](const Analytic1DMeasure& mu, std::size_t n, double p) { return optimal_dual_1d(mu, n, p); },
      py::arg("mu"), py::arg("n"), py::arg("p"));
  m.def("dual_distortion_lp", &dual_distortion_lp, py::arg("mu"), py::arg("grid"), py::arg("p") = 2.0);

  m.def(
      "w_p", [=](const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) { return value_and_coupling(w_p(mu, nu, p)); },
      py::arg("mu"), py::arg("nu"), py::arg("p"), "Returns (W_p^p, optimal coupling).");
  m.def("w_p_semidiscrete_1d", &w_p_semidiscrete_1d, py::arg("mu"), py::arg("nu"), py::arg("p"));
  m.def(
      "m_p", [=](const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) { return value_and_coupling(m_p(mu, nu, p)); },
      py::arg("mu"), py::arg("nu"), py::arg("p"), "Returns (M_p^p, optimal martingale coupling).");
  m.def(
      "mot_value",
      [=](const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost, PriceBound bound) {
        return value_and_coupling(mot_value(mu, nu, cost, bound));
      },
      py::arg("mu"), py::arg("nu"), py::arg("cost"), py::arg("bound") = PriceBound::lower);

  m.def(
      "build_pi_bar",
      [](const Coupling& pi, const Quantizer& gamma, const SplittingKernel& q, double p) {
        const auto b = build_pi_bar(MartingaleCoupling(pi), gamma, q, p);
        py::dict d;
        d["pi_check"] = Coupling(b.pi_check);
        d["pi_bar"] = Coupling(b.pi_bar);
        d["mu_hat"] = b.mu_hat;
        d["nu_check"] = b.nu_check;
        d["e2_squared"] = b.e2_squared;
        d["dual_cost_p"] = b.dual_cost_p;
        return d;
      },
      py::arg("pi"), py::arg("gamma_mu"), py::arg("q"), py::arg("p") = 2.0);
  m.def("aw_p", &aw_p, py::arg("pi"), py::arg("other"), py::arg("p"));
  m.def("coupling_distance_w_p", &coupling_distance_w_p, py::arg("pi"), py::arg("other"), py::arg("p"));

  m.def("load_measure", [](const std::string& text) -> py::object {
    auto v = json::parse_measure(text);
    if (auto* a = std::get_if<Analytic1DMeasure>(&v)) return py::cast(*a);
    return py::cast(std::get<DiscreteMeasure>(v));
  });

  auto fx = m.def_submodule("fixtures", "Builtin example measures");
  fx.def("uniform01", &fixtures::uniform01);
  fx.def("tri2x", &fixtures::tri2x);
  fx.def("invsqrt", &fixtures::invsqrt);
  fx.def("mu6", &fixtures::mu6);
  fx.def("mu6_check", &fixtures::mu6_check);
  fx.def("tri2x_dual_family", &fixtures::tri2x_dual_family, py::arg("u"));
}
