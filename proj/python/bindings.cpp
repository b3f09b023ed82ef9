#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "experiments.hpp"
#include "mobius/am.hpp"
#include "mobius/cotype.hpp"
#include "mobius/gauge.hpp"
#include "mobius/generate.hpp"
#include "mobius/heisenberg.hpp"
#include "mobius/space_io.hpp"
#include "mobius/transforms.hpp"

namespace py = pybind11;
using namespace mobius;

namespace {

std::optional<double> cr_value(const PointSpace& s, Index x, Index y, Index z, Index w) {
  const auto cr = cross_ratio(s, Quadruple::make(x, y, z, w));
  if (!cr) return std::nullopt;
  return cr->value();
}

PointSpace space_from_matrix(const Eigen::MatrixXd& d, std::optional<std::vector<std::string>> labels) {
  const auto n = static_cast<std::size_t>(d.rows());
  if (d.cols() != d.rows()) throw PreconditionError("distance matrix must be square");
  std::vector<std::string> names;
  if (labels) {
    if (labels->size() != n) throw PreconditionError("labels do not match the matrix size");
    names = *labels;
  } else {
    for (std::size_t i = 0; i < n; ++i) names.push_back("p" + std::to_string(i));
  }
  std::vector<double> table(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) table[i * n + j] = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return PointSpace::from_table(std::move(names), std::move(table));
}

Eigen::MatrixXd space_matrix(const PointSpace& s) {
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = s.distance(static_cast<Index>(i), static_cast<Index>(j));
  return out;
}

std::shared_ptr<const PointSpace> share(const PointSpace& s) { return std::make_shared<const PointSpace>(s); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cross-ratios, gauges, Heisenberg kernels and metric cotype";
  m.attr("__version__") = MOBIUS_LAB_VERSION;

  static py::exception<Error> base(m, "MobiusError");
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<lab::ConfigError>(m, "ConfigError", base.ptr());

  py::class_<PointSpace>(m, "PointSpace")
      .def_static("from_matrix", &space_from_matrix, py::arg("distances"), py::arg("labels") = py::none())
      .def_static("read_csv", py::overload_cast<const std::filesystem::path&>(&read_space_csv))
      .def("write_csv", py::overload_cast<const PointSpace&, const std::filesystem::path&>(&write_space_csv))
      .def("to_csv", [](const PointSpace& s) {
        std::ostringstream ss;
        write_space_csv(s, ss);
        return ss.str();
      })
      .def("__len__", &PointSpace::size)
      .def("distance", &PointSpace::distance)
      .def("matrix", &space_matrix)
      .def_property_readonly("labels", &PointSpace::labels)
      .def("index_of", &PointSpace::index_of)
      .def_property_readonly("infinity_point", &PointSpace::infinity_point)
      .def_property_readonly("origin", &PointSpace::origin)
      .def("set_origin", &PointSpace::set_origin)
      .def("add_infinity_point", &PointSpace::add_infinity_point, py::arg("label") = "inf")
      .def_property_readonly("K", &PointSpace::quasimetric_k);

  m.def("real_line_points", [](const std::vector<double>& xs, bool infinity) {
    return real_line_points(xs, GenerateOptions{infinity, 1000000});
  }, py::arg("xs"), py::arg("infinity") = false);
  m.def("lp_grid", [](double p, int dims, int side) { return lp_grid(p, dims, side); });
  m.def("random_euclidean_space",
        [](std::size_t n, int dims, std::uint64_t seed) { return random_euclidean_space(n, dims, seed).materialized(); });
  m.def("random_quasimetric", &random_quasimetric);

  m.def("cross_ratio", &cr_value, "Cross-ratio d(x,z)d(y,w)/(d(x,w)d(y,z)); None when indeterminate");
  m.def("cayley_transform", &cayley_transform);
  m.def("inverse_cayley_transform", &inverse_cayley_transform);
  m.def("snowflake", &snowflake);
  m.def("chain_smooth", &chain_smooth);
  m.def("verify_extended_metric", [](const PointSpace& s) {
    const auto rep = verify_extended_metric(s);
    std::vector<std::string> msgs;
    for (const auto& v : rep.violations) msgs.push_back(v.describe(s));
    return py::make_tuple(rep.ok, msgs);
  });
  m.def("moebius_defect", [](const PointSpace& a, const PointSpace& b, std::size_t budget, std::uint64_t seed) {
    return moebius_defect(PointMap::by_label(a, b), budget, seed).defect;
  }, py::arg("source"), py::arg("target"), py::arg("budget") = 1000, py::arg("seed") = 0);

  py::class_<Gauge>(m, "Gauge")
      .def_static("parse", &Gauge::parse, py::arg("spec"), py::arg("base_dir") = std::filesystem::path())
      .def("__call__", &Gauge::operator())
      .def("__repr__", &Gauge::to_string);
  m.def("is_separated", &is_separated);

  py::class_<HeisPoint>(m, "HeisPoint")
      .def(py::init([](std::vector<Complex> a, double t) { return HeisPoint{std::move(a), t}; }))
      .def_readwrite("a", &HeisPoint::a)
      .def_readwrite("t", &HeisPoint::t)
      .def("__mul__", &heis_mul)
      .def("inverse", &heis_inv);
  m.def("heis_norm", [](const HeisPoint& g) { return heis_norm(g); });
  m.def("heis_distance", &heis_distance);
  m.def("random_heis_points", &random_heis_points, py::arg("dim"), py::arg("count"), py::arg("seed"),
        py::arg("t_range") = 2.0);
  m.def("phi_lambda_gram", [](const std::vector<HeisPoint>& pts, double lambda, const std::string& ordering) {
    if (ordering != "left" && ordering != "right") throw PreconditionError("ordering must be 'left' or 'right'");
    return phi_lambda_gram(pts, lambda, ordering == "left" ? GramOrdering::left : GramOrdering::right).entries;
  }, py::arg("points"), py::arg("lambda_"), py::arg("ordering") = "left");
  m.def("heis_distance_kernel", [](const std::vector<HeisPoint>& pts) { return heis_distance_kernel(pts).real(); });
  m.def("check_cnd", [](const Eigen::MatrixXd& k, double tol) {
    const auto r = check_cnd(KernelMatrix::from_real(k), tol);
    return py::dict(py::arg("is_cnd") = r.is_cnd, py::arg("max_centered_eigenvalue") = r.max_centered_eigenvalue,
                    py::arg("spectral_radius") = r.spectral_radius, py::arg("centered_spectrum") = r.centered_spectrum);
  }, py::arg("kernel"), py::arg("rel_tol") = 1e-8);
  m.def("gns_embed", [](const Eigen::MatrixXd& k, std::size_t basepoint) {
    const auto e = gns_embed(KernelMatrix::from_real(k), basepoint);
    return py::make_tuple(e.coordinates, e.reconstruction_error);
  }, py::arg("kernel"), py::arg("basepoint") = 0);
  m.def("integral_identity", [](double r, double t) {
    const auto rep = integral_identity(r, t);
    return py::dict(py::arg("lhs") = rep.lhs, py::arg("rhs") = rep.rhs, py::arg("rel_error") = rep.rel_error);
  });
  m.def("cnd_quotient", [](double a, double t, double eps) { return cnd_quotient(a, t, eps); });

  m.def("cotype_sides", [](int n, int mm, double q, const PointSpace& target, std::vector<Index> f) {
    const auto s = cotype_sides(CotypeInstance{n, mm, q, share(target), std::move(f)});
    return py::make_tuple(s.lhs, s.rhs, s.ratio);
  });
  m.def("cotype_search", [](int n, int mm, double q, const PointSpace& target, std::uint64_t budget,
                            std::size_t restarts, std::uint64_t seed) {
    SearchOptions o;
    o.budget = budget;
    o.restarts = restarts;
    o.seed = seed;
    const auto r = cotype_search(n, mm, q, share(target), o);
    return py::dict(py::arg("best_ratio") = r.best_ratio, py::arg("best_f") = r.best_f, py::arg("method") = r.method);
  }, py::arg("n"), py::arg("m"), py::arg("q"), py::arg("target"), py::arg("budget") = 100000,
        py::arg("restarts") = 20, py::arg("seed") = 0);
  m.def("enflo_sides", [](int n, double p, const PointSpace& target, std::vector<Index> f) {
    const auto s = enflo_sides(EnfloInstance{n, p, share(target), std::move(f)});
    return py::make_tuple(s.lhs, s.rhs_sum, s.ratio);
  });

  m.def("run_experiment", [](const std::filesystem::path& config, std::optional<std::uint64_t> seed) {
    const auto out = lab::run_experiment(lab::load_experiment(config, seed));
    return py::make_tuple(lab::render_report(out.report, lab::utc_timestamp()), out.passed);
  }, py::arg("config"), py::arg("seed") = py::none(),
        "Run a TOML experiment config; returns (report JSON text, passed). Writes no files.");
  m.def("experiment_kinds", &lab::experiment_kinds);
}
