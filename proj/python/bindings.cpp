#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "irrlab/experiment.hpp"

namespace py = pybind11;
using namespace irrlab;

namespace {

Scenario lookup(const std::string& name) { return scenario_by_name(name); }

py::array_t<double> column(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::dict coefficient_dict(const EdgeCoefficients& e)
{
    py::dict d;
    d["edge"] = GraphTopology::edge_label(e.edge_id);
    d["z"] = column(e.z_grid);
    d["T"] = column(e.T);
    d["A_hat"] = column(e.A_hat);
    d["M"] = column(e.M);
    d["M_prime"] = column(e.M_prime);
    d["f_hat"] = column(e.f_hat);
    d["drift"] = column(e.drift);
    d["diffusion_var"] = column(e.diffusion_var);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Irreversible Langevin sampling lab";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def("scenarios", &shipped_scenario_names);

    m.def(
        "critical_points",
        [](const std::string& scenario) {
            py::list out;
            for (const auto& p : classify_critical_points(lookup(scenario)).points)
                out.append(py::make_tuple(to_string(p.kind), p.location.x, p.location.y, p.value));
            return out;
        },
        py::arg("scenario"), "(kind, x, y, U) for each critical point");

    m.def(
        "verify_conditions",
        [](const std::string& scenario, int n_probes, std::uint64_t seed) {
            const auto r = verify_conditions(DriftField{lookup(scenario)}, n_probes, 1e-6, seed);
            return py::dict(py::arg("max_orthogonality") = r.max_orthogonality,
                            py::arg("max_divergence") = r.max_divergence);
        },
        py::arg("scenario"), py::arg("n_probes") = 1000, py::arg("seed") = 0);

    m.def(
        "simulate",
        [](const std::string& scenario, double beta, double delta, double t, double dt, std::uint64_t seed, int thin,
           std::pair<double, double> x0) {
            const Scenario sc = lookup(scenario);
            SimConfig cfg(GibbsSpec{sc, beta}, DriftField{sc, AntisymmetricMatrix(1.0), delta});
            cfg.x0 = {x0.first, x0.second};
            cfg.t_final = t;
            cfg.dt_base = dt;
            cfg.seed = seed;
            cfg.thin = thin;
            Trajectory tr;
            {
                py::gil_scoped_release release;
                tr = simulate(cfg);
            }
            py::array_t<double> xy({static_cast<py::ssize_t>(tr.size()), py::ssize_t{2}});
            auto w = xy.mutable_unchecked<2>();
            for (std::size_t k = 0; k < tr.size(); ++k) {
                w(k, 0) = tr.states[k].x;
                w(k, 1) = tr.states[k].y;
            }
            return py::make_tuple(column(tr.times), xy);
        },
        py::arg("scenario"), py::arg("beta") = 0.1, py::arg("delta") = 0.0, py::arg("t") = 10.0,
        py::arg("dt") = 1e-3, py::arg("seed") = 0, py::arg("thin") = 1, py::arg("x0") = std::make_pair(-1.0, 0.0),
        "Returns (times, states) with states of shape (n, 2).");

    m.def(
        "sweep_csv",
        [](const std::string& scenario, double beta, std::vector<double> deltas, std::vector<double> horizons,
           int replicas, std::uint64_t seed, double burn_in) {
            const Scenario sc = lookup(scenario);
            SweepOptions opt;
            opt.burn_in = burn_in;
            py::gil_scoped_release release;
            return sweep_csv(delta_sweep(sc, sc.observable("f2"), beta, deltas, horizons, replicas, seed, opt));
        },
        py::arg("scenario"), py::arg("beta"), py::arg("deltas"), py::arg("horizons"), py::arg("replicas") = 8,
        py::arg("seed") = 0, py::arg("burn_in") = 50.0, "Variance of the time average of x^2+y^2 as CSV text.");

    m.def(
        "poisson_oracle",
        [](const std::string& scenario, double beta, double delta) {
            const Scenario sc = lookup(scenario);
            py::gil_scoped_release release;
            return poisson_oracle_2d(GibbsSpec{sc, beta}, DriftField{sc, AntisymmetricMatrix(1.0), delta},
                                     sc.observable("f2"))
                .value;
        },
        py::arg("scenario"), py::arg("beta") = 0.1, py::arg("delta") = 0.0,
        "Asymptotic variance of x^2+y^2 from the 2-D Poisson equation.");

    m.def(
        "graph_json", [](const std::string& scenario) { return topology_json(build_graph(lookup(scenario))); },
        py::arg("scenario"));

    m.def(
        "coefficients",
        [](const std::string& scenario, double beta, int grid) {
            const Scenario sc = lookup(scenario);
            const GraphTopology g = build_graph(sc);
            CoefficientTable t;
            {
                py::gil_scoped_release release;
                t = tabulate_edge_coefficients(g, sc.observable("f2"), beta, grid);
            }
            py::list out;
            for (const auto& e : t.edges)
                out.append(coefficient_dict(e));
            py::list glue;
            for (const auto& gw : t.gluing)
                glue.append(py::dict(py::arg("vertex") = gw.vertex_id, py::arg("b") = gw.b,
                                     py::arg("flagged") = gw.flagged));
            return py::make_tuple(out, glue);
        },
        py::arg("scenario"), py::arg("beta") = 0.1, py::arg("grid") = 128,
        "Per-edge coefficient columns and saddle gluing weights.");

    m.def(
        "limiting_variance",
        [](const std::string& scenario, double beta, int grid) {
            const Scenario sc = lookup(scenario);
            py::gil_scoped_release release;
            return limiting_variance(sc, sc.observable("f2"), beta, grid).estimate.value;
        },
        py::arg("scenario"), py::arg("beta") = 0.1, py::arg("grid") = 128,
        "Asymptotic variance of x^2+y^2 for the limiting graph diffusion.");

    m.def("preset_names", &preset_names);
    m.def(
        "run_preset",
        [](const std::string& name, std::uint64_t seed, const std::string& out_dir, int workers) {
            Manifest mf;
            {
                py::gil_scoped_release release;
                mf = run_preset(name, seed, out_dir, workers);
            }
            return mf.to_json();
        },
        py::arg("name"), py::arg("seed") = 0, py::arg("out_dir") = ".", py::arg("workers") = 0,
        "Writes the preset CSVs and manifest.json; returns the manifest text.");
}
