#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "irrlab/experiment.hpp"

using namespace irrlab;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kNumerical = 3;

void emit(const std::string& out, const std::string& content)
{
    if (out.empty() || out == "-") {
        std::cout << content;
        return;
    }
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f)
        throw ValidationError("--out: cannot open '" + out + "'");
    f << content;
}

// Values given on the command line override the config file; everything else
// keeps the file (or built-in) value.
struct Overrides {
    std::string config_path;
    std::string scenario;
    std::string terms;
    double beta = 0.0;
    double s = 0.0;
    std::vector<double> deltas;
    std::vector<double> horizons;
    int replicas = 0;
    std::uint64_t seed = 0;
    double dt = 0.0;
    int thin = 0;
    std::string observable;
    int workers = 0;
    int grid = 0;
    double z_max = 0.0;

    std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> setters;

    template <class T>
    void bind(CLI::App* app, const std::string& flag, T& slot, const std::string& help,
              std::function<void(ExperimentConfig&, const T&)> apply)
    {
        CLI::Option* o = app->add_option(flag, slot, help);
        setters.emplace_back(o, [&slot, apply](ExperimentConfig& c) { apply(c, slot); });
    }

    ExperimentConfig resolve() const
    {
        ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        for (const auto& [opt, set] : setters)
            if (opt->count() > 0)
                set(c);
        return c;
    }
};

void add_common(CLI::App* app, Overrides& o, bool with_scenario = true)
{
    app->add_option("--config", o.config_path, "INI config file; flags override it")->check(CLI::ExistingFile);
    if (!with_scenario)
        return;
    o.bind<std::string>(app, "--scenario", o.scenario, "bowl, double_well, or a name for --terms",
                        [](ExperimentConfig& c, const std::string& v) { c.scenario = v; });
    o.bind<std::string>(app, "--terms", o.terms, "polynomial potential as \"c:i:j, ...\"",
                        [](ExperimentConfig& c, const std::string& v) { c.custom_terms = parse_poly_terms(v); });
    o.bind<double>(app, "--beta", o.beta, "temperature",
                   [](ExperimentConfig& c, const double& v) { c.beta = v; });
    o.bind<std::string>(app, "--observable", o.observable, "observable name (f2 = x^2 + y^2)",
                        [](ExperimentConfig& c, const std::string& v) { c.observable = v; });
}

void print_warnings(const ConfigReport& rep)
{
    for (const auto& w : rep.warnings)
        std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Irreversible Langevin sampling lab"};
    app.require_subcommand(1);

    Overrides o;

    // scenario
    auto* sc_cmd = app.add_subcommand("scenario", "List critical points of a scenario");
    add_common(sc_cmd, o);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate one trajectory, CSV t,x,y");
    add_common(sim, o);
    double sim_delta = 0.0;
    double sim_t = 10.0;
    std::vector<double> sim_x0{-1.0, 0.0};
    std::string sim_integrator = "split";
    std::string sim_out;
    sim->add_option("--delta", sim_delta, "irreversibility strength")->check(CLI::NonNegativeNumber);
    sim->add_option("--t", sim_t, "final time")->check(CLI::NonNegativeNumber);
    sim->add_option("--x0", sim_x0, "start point x,y")->delimiter(',')->expected(2);
    sim->add_option("--integrator", sim_integrator, "split or euler");
    sim->add_option("--out", sim_out, "output CSV (default stdout)");
    o.bind<double>(sim, "--dt", o.dt, "base step", [](ExperimentConfig& c, const double& v) { c.dt_base = v; });
    o.bind<std::uint64_t>(sim, "--seed", o.seed, "seed", [](ExperimentConfig& c, const std::uint64_t& v) { c.seed = v; });
    o.bind<int>(sim, "--thin", o.thin, "keep every n-th step", [](ExperimentConfig& c, const int& v) { c.thin = v; });
    o.bind<double>(sim, "--s", o.s, "S = [[0,s],[-s,0]]", [](ExperimentConfig& c, const double& v) { c.s = v; });

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Variance of the time average over a delta x t grid");
    add_common(sweep, o);
    std::string sweep_out;
    std::string sweep_replicas_out;
    double sweep_burn_in = 50.0;
    sweep->add_option("--out", sweep_out, "median table CSV (default stdout)");
    sweep->add_option("--replicas-out", sweep_replicas_out, "per-replica CSV");
    sweep->add_option("--burn-in", sweep_burn_in, "discarded initial time")->check(CLI::NonNegativeNumber);
    o.bind<std::vector<double>>(sweep, "--deltas", o.deltas, "comma separated",
                                [](ExperimentConfig& c, const std::vector<double>& v) { c.deltas = v; });
    o.bind<std::vector<double>>(sweep, "--horizons", o.horizons, "comma separated",
                                [](ExperimentConfig& c, const std::vector<double>& v) { c.horizons = v; });
    o.bind<int>(sweep, "--replicas", o.replicas, "independent replicas",
                [](ExperimentConfig& c, const int& v) { c.replicas = v; });
    o.bind<std::uint64_t>(sweep, "--seed", o.seed, "master seed",
                          [](ExperimentConfig& c, const std::uint64_t& v) { c.seed = v; });
    o.bind<double>(sweep, "--dt", o.dt, "base step", [](ExperimentConfig& c, const double& v) { c.dt_base = v; });
    o.bind<int>(sweep, "--workers", o.workers, "threads (0 = all)",
                [](ExperimentConfig& c, const int& v) { c.workers = v; });
    o.bind<double>(sweep, "--s", o.s, "S = [[0,s],[-s,0]]", [](ExperimentConfig& c, const double& v) { c.s = v; });
    for (auto* cmd : {sweep})
        for (auto* opt : {cmd->get_option("--deltas"), cmd->get_option("--horizons")})
            opt->delimiter(',');

    // coefficients
    auto* coef = app.add_subcommand("coefficients", "Tabulate averaged edge coefficients");
    add_common(coef, o);
    std::string coef_out;
    coef->add_option("--out", coef_out, "output CSV (default stdout)");
    o.bind<int>(coef, "--grid", o.grid, "nodes per edge", [](ExperimentConfig& c, const int& v) { c.grid = v; });
    o.bind<double>(coef, "--z-max", o.z_max, "truncation level",
                   [](ExperimentConfig& c, const double& v) { c.z_max = v; });
    o.bind<int>(coef, "--workers", o.workers, "threads (0 = all)",
                [](ExperimentConfig& c, const int& v) { c.workers = v; });

    // graph show
    auto* graph = app.add_subcommand("graph", "Level-set graph of a scenario");
    auto* show = graph->add_subcommand("show", "Print vertices and edges");
    graph->require_subcommand(1);
    add_common(show, o);
    bool show_json = false;
    show->add_flag("--json", show_json, "JSON output");

    // graph-limit
    auto* glim = app.add_subcommand("graph-limit", "Asymptotic variance of the limiting graph diffusion");
    add_common(glim, o);
    std::string glim_out;
    bool glim_header = true;
    glim->add_option("--out", glim_out, "output CSV (default stdout)");
    glim->add_flag("!--no-header", glim_header, "omit the CSV header");
    o.bind<int>(glim, "--grid", o.grid, "nodes per edge", [](ExperimentConfig& c, const int& v) { c.grid = v; });
    o.bind<double>(glim, "--z-max", o.z_max, "truncation level",
                   [](ExperimentConfig& c, const double& v) { c.z_max = v; });
    o.bind<int>(glim, "--workers", o.workers, "threads (0 = all)",
                [](ExperimentConfig& c, const int& v) { c.workers = v; });

    // preset
    auto* preset = app.add_subcommand("preset", "Regenerate a named figure or table dataset");
    std::string preset_name;
    std::string preset_dir = ".";
    std::uint64_t preset_seed = 0;
    int preset_workers = 0;
    bool preset_list = false;
    preset->add_option("name", preset_name, "preset name");
    preset->add_option("--out-dir", preset_dir, "output directory");
    preset->add_option("--seed", preset_seed, "master seed");
    preset->add_option("--workers", preset_workers, "threads (0 = all)")->check(CLI::NonNegativeNumber);
    preset->add_flag("--list", preset_list, "list preset names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    try {
        if (*preset) {
            if (preset_list || preset_name.empty()) {
                for (const auto& n : preset_names())
                    std::cout << n << "\n";
                return preset_name.empty() && !preset_list ? kValidation : kOk;
            }
            const Manifest m = run_preset(preset_name, preset_seed, preset_dir, preset_workers);
            for (const auto& e : m.entries)
                std::cerr << (e.ok ? "ok     " : "FAILED ") << e.file << (e.ok ? "" : ": " + e.error) << "\n";
            return m.ok() ? kOk : kNumerical;
        }

        const ConfigReport rep = validate_config(o.resolve());
        print_warnings(rep);
        const ExperimentConfig& c = rep.config;
        const Scenario scenario = make_scenario(c);

        if (*sc_cmd) {
            const CriticalPointCatalog cat = classify_critical_points(scenario);
            std::cout << "kind,x,y,U\n";
            for (const auto& p : cat.points)
                std::cout << to_string(p.kind) << ',' << format_double(p.location.x) << ','
                          << format_double(p.location.y) << ',' << format_double(p.value) << "\n";
            return kOk;
        }
        if (*sim) {
            SimConfig cfg(GibbsSpec{scenario, c.beta}, DriftField{scenario, AntisymmetricMatrix(c.s), sim_delta});
            cfg.x0 = {sim_x0.at(0), sim_x0.at(1)};
            cfg.t_final = sim_t;
            cfg.dt_base = c.dt_base;
            cfg.thin = c.thin;
            cfg.seed = c.seed;
            cfg.integrator = integrator_from_string(sim_integrator);
            cfg.validate();
            if (sim_delta > 0.0 && cfg.effective_dt() < c.dt_base * (1 - 1e-12))
                std::cerr << "note: effective dt " << format_double(cfg.effective_dt()) << "\n";
            emit(sim_out, trajectory_csv(simulate(cfg)));
            return kOk;
        }
        if (*sweep) {
            SweepOptions opt;
            opt.burn_in = sweep_burn_in;
            opt.dt_base = c.dt_base;
            opt.s = c.s;
            opt.workers = c.workers;
            const SweepTable t = delta_sweep(scenario, scenario.observable(c.observable), c.beta, c.deltas,
                                             c.horizons, c.replicas, c.seed, opt);
            emit(sweep_out, sweep_csv(t));
            if (!sweep_replicas_out.empty())
                emit(sweep_replicas_out, sweep_replicas_csv(t));
            return kOk;
        }
        if (*coef || *glim) {
            const GraphTopology g = build_graph(scenario, c.z_max);
            const CoefficientTable t =
                tabulate_edge_coefficients(g, scenario.observable(c.observable), c.beta, c.grid, {}, c.workers);
            if (*coef) {
                emit(coef_out, coefficients_csv(t));
                return kOk;
            }
            const GraphLimit lim = limiting_variance(t, g);
            if (lim.gluing_flagged)
                std::cerr << "warning: gluing weight extrapolation gap above 2%\n";
            emit(glim_out, (glim_header ? graph_limit_csv_header() : std::string{}) +
                               graph_limit_csv_row(scenario.name(), c.beta, c.observable, lim.estimate, c.grid));
            return kOk;
        }
        if (*show) {
            const GraphTopology g = build_graph(scenario, c.z_max);
            if (show_json) {
                std::cout << topology_json(g);
                return kOk;
            }
            std::cout << "vertices\n";
            for (const auto& v : g.vertices())
                std::cout << "  v" << v.id << "  " << to_string(v.kind) << "  z=" << format_double(v.z) << "\n";
            std::cout << "edges\n";
            for (const auto& e : g.edges())
                std::cout << "  " << GraphTopology::edge_label(e.id) << "  z in [" << format_double(e.z_lo) << ", "
                          << format_double(e.z_hi) << "]  v" << e.lower << " -> v" << e.upper << "\n";
            return kOk;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kOk;
}
