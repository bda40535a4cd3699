#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "magflow/config.hpp"
#include "magflow/estimators.hpp"

namespace py = pybind11;
using namespace magflow;

namespace {

SurfaceModel surface_from_config(const std::string& text) {
    return parse_config(text).make_surface();
}

py::dict estimate_dict(const IntegralEstimate& e) {
    py::dict d;
    d["value"] = e.value;
    d["std_error"] = e.std_error;
    d["n_samples"] = e.n_samples;
    d["T"] = e.T;
    d["n_failed"] = e.n_failed;
    d["n_resampled"] = e.n_resampled;
    d["rejected"] = e.rejected;
    return d;
}

py::dict growth_dict(const GrowthEstimate& g) {
    py::dict d;
    d["rate"] = g.rate;
    d["ci_half_width"] = g.ci_half_width;
    d["window"] = py::make_tuple(g.window_lo, g.window_hi);
    d["n_excluded"] = g.n_excluded;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Magnetic geodesic flows on model surfaces: trajectory counting "
              "and determinant-growth estimators";

    py::register_exception<ConfigParseError>(m, "ConfigError");

    py::class_<ChartPoint>(m, "ChartPoint")
        .def(py::init<double, double>(), py::arg("u"), py::arg("v"))
        .def_readwrite("u", &ChartPoint::u)
        .def_readwrite("v", &ChartPoint::v)
        .def("__repr__", [](const ChartPoint& p) {
            return "ChartPoint(" + std::to_string(p.u) + ", " + std::to_string(p.v) + ")";
        });

    py::class_<SurfaceModel>(m, "SurfaceModel")
        .def_static("flat_torus",
                    [](double Lx, double Ly, double s, const std::string& b) {
                        return SurfaceModel::flat_torus(Lx, Ly, s, Expr::parse(b));
                    },
                    py::arg("Lx"), py::arg("Ly"), py::arg("s"), py::arg("b") = "1")
        .def_static("hyperbolic_plane",
                    [](double s, const std::string& b) {
                        return SurfaceModel::hyperbolic_plane(s, Expr::parse(b));
                    },
                    py::arg("s"), py::arg("b") = "1")
        .def_static("conformal_torus",
                    [](double Lx, double Ly, const std::string& lam, const std::string& b,
                       double s) {
                        return SurfaceModel::conformal_torus(Lx, Ly, Expr::parse(lam),
                                                             Expr::parse(b), s);
                    },
                    py::arg("Lx"), py::arg("Ly"), py::arg("lam"), py::arg("b"), py::arg("s"))
        .def_static("from_config", &surface_from_config, py::arg("text"))
        .def_property_readonly("field_strength", &SurfaceModel::field_strength)
        .def("area", [](const SurfaceModel& s) { return area(s); });

    py::class_<CountOptions>(m, "CountOptions")
        .def(py::init<>())
        .def_readwrite("n_angle", &CountOptions::n_angle)
        .def_readwrite("time_cell", &CountOptions::time_cell)
        .def_readwrite("step", &CountOptions::step)
        .def_readwrite("tol_pos", &CountOptions::tol_pos)
        .def_readwrite("t_min", &CountOptions::t_min)
        .def_readwrite("max_newton", &CountOptions::max_newton)
        .def_readwrite("allow_equal_endpoints", &CountOptions::allow_equal_endpoints);

    m.def("trajectory",
          [](const SurfaceModel& surface, double u, double v, double angle, double T, double h) {
              TrajectorySample traj = flow(surface, unit_state(surface, {u, v}, angle), T, h);
              std::vector<std::tuple<double, double, double, double, double, double>> rows;
              rows.reserve(traj.times.size());
              for (size_t i = 0; i < traj.times.size(); ++i) {
                  const UnitTangentState& st = traj.states[i];
                  rows.emplace_back(traj.times[i], st.point.u, st.point.v, st.velocity.du,
                                    st.velocity.dv, energy(surface, st));
              }
              return rows;
          },
          py::arg("surface"), py::arg("u"), py::arg("v"), py::arg("angle"), py::arg("T"),
          py::arg("h") = 1e-3);

    m.def("alpha_determinant_along",
          [](const SurfaceModel& surface, double u, double v, double angle, double T, double h) {
              DeterminantTrace trace =
                  alpha_determinant_along(surface, unit_state(surface, {u, v}, angle), T, h);
              return py::make_tuple(trace.times, trace.det_values);
          },
          py::arg("surface"), py::arg("u"), py::arg("v"), py::arg("angle"), py::arg("T"),
          py::arg("h") = 1e-3);

    m.def("log_det_growth",
          [](const SurfaceModel& surface, double u, double v, double angle, double T, double h,
             double window_fraction) {
              return growth_dict(log_det_growth(surface, unit_state(surface, {u, v}, angle), T, h,
                                                window_fraction));
          },
          py::arg("surface"), py::arg("u"), py::arg("v"), py::arg("angle"), py::arg("T"),
          py::arg("h") = 1e-3, py::arg("window_fraction") = 0.5);

    m.def("count_connections",
          [](const SurfaceModel& surface, const ChartPoint& x, const ChartPoint& y, double T,
             const CountOptions& opts) {
              CountResult res = count_connections(surface, x, y, T, opts);
              std::vector<py::dict> roots;
              for (const ConnectionRoot& r : res.roots) {
                  py::dict d;
                  d["angle"] = r.angle;
                  d["t"] = r.t;
                  d["residual"] = r.residual;
                  d["jacobian_det"] = r.jacobian_det;
                  roots.push_back(d);
              }
              py::dict out;
              out["count"] = res.count;
              out["roots"] = roots;
              out["continuum_degenerate"] = res.flags.continuum_degenerate;
              out["suspected_multiplicity"] = res.flags.suspected_multiplicity;
              return out;
          },
          py::arg("surface"), py::arg("x"), py::arg("y"), py::arg("T"),
          py::arg("opts") = CountOptions{});

    m.def("rhs_integral",
          [](const SurfaceModel& surface, double T, long n_theta, double h, std::uint64_t seed,
             int workers) {
              return estimate_dict(rhs_integral(surface, T, n_theta, h, seed, workers));
          },
          py::arg("surface"), py::arg("T"), py::arg("n_theta") = 1000, py::arg("h") = 1e-3,
          py::arg("seed") = 0, py::arg("workers") = 1);

    m.def("lhs_integral",
          [](const SurfaceModel& surface, double T, long n_pairs, const CountOptions& opts,
             std::uint64_t seed, int workers) {
              return estimate_dict(lhs_integral(surface, T, n_pairs, opts, seed, workers));
          },
          py::arg("surface"), py::arg("T"), py::arg("n_pairs") = 1000,
          py::arg("opts") = CountOptions{}, py::arg("seed") = 0, py::arg("workers") = 1);

    m.def("lemma_check",
          [](const SurfaceModel& surface, const std::vector<double>& T_list, long n_theta,
             long n_pairs, const CountOptions& opts, double h, std::uint64_t seed, int workers) {
              LemmaReport rep =
                  lemma_check(surface, T_list, n_theta, n_pairs, opts, h, seed, workers);
              py::dict out;
              out["status"] = rep.status == ReportStatus::Pass   ? "PASS"
                              : rep.status == ReportStatus::Fail ? "FAIL"
                                                                 : "INCOMPLETE";
              out["cause"] = rep.cause;
              std::vector<py::dict> rows;
              for (const LemmaRow& row : rep.rows) {
                  py::dict d;
                  d["T"] = row.T;
                  d["lhs"] = estimate_dict(row.lhs);
                  d["rhs"] = estimate_dict(row.rhs);
                  d["tolerance"] = row.tolerance;
                  d["pass"] = row.pass;
                  rows.push_back(d);
              }
              out["rows"] = rows;
              return out;
          },
          py::arg("surface"), py::arg("T_list"), py::arg("n_theta") = 1000,
          py::arg("n_pairs") = 1000, py::arg("opts") = CountOptions{}, py::arg("h") = 1e-3,
          py::arg("seed") = 0, py::arg("workers") = 1);

    m.def("entropy_report",
          [](const SurfaceModel& surface, double T_max, long n_theta, double h,
             std::uint64_t seed, std::optional<double> reference, int workers) {
              EntropyReport rep =
                  entropy_report(surface, T_max, n_theta, h, seed, reference, workers);
              py::dict out = growth_dict(rep.estimate);
              out["reference"] = rep.reference;
              out["abs_error"] = rep.abs_error;
              out["pass"] = rep.pass;
              return out;
          },
          py::arg("surface"), py::arg("T_max"), py::arg("n_theta") = 200, py::arg("h") = 1e-3,
          py::arg("seed") = 0, py::arg("reference") = std::nullopt, py::arg("workers") = 1);
}
