#include "irrlab/experiment.hpp"

#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "irrlab/drift.hpp"
#include "irrlab/rng.hpp"

namespace irrlab {

namespace fs = std::filesystem;

namespace {

std::vector<double> parse_list(const std::string& text, const std::string& field)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos)
            continue;
        const auto e = item.find_last_not_of(" \t");
        const std::string tok = item.substr(b, e - b + 1);
        double v = 0.0;
        const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
            throw ValidationError(field + ": cannot parse '" + tok + "' as a number");
        out.push_back(v);
    }
    return out;
}

bool writable_dir(const std::string& dir)
{
    std::error_code ec;
    fs::path p(dir.empty() ? "." : dir);
    while (!fs::exists(p, ec)) {
        if (!p.has_parent_path() || p.parent_path() == p)
            return false;
        p = p.parent_path();
    }
    return fs::is_directory(p, ec) && ::access(p.c_str(), W_OK) == 0;
}

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ValidationError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out)
        throw NumericalError("write failed for " + path.string());
}

std::string hex64(std::uint64_t v)
{
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

}  // namespace

ConfigReport validate_config(const ExperimentConfig& config)
{
    ConfigReport rep{config, {}};
    ExperimentConfig& c = rep.config;
    std::vector<std::string> errors;
    auto err = [&](const std::string& field, const std::string& why) { errors.push_back(field + ": " + why); };

    if (c.scenario.empty())
        err("scenario.name", "empty");
    else if (c.custom_terms.empty()) {
        const auto names = shipped_scenario_names();
        if (std::find(names.begin(), names.end(), c.scenario) == names.end())
            err("scenario.name", "unknown scenario '" + c.scenario + "' and no terms given");
    }
    if (!(c.beta > 0.0) || !std::isfinite(c.beta))
        err("run.beta", "must be positive");
    if (!std::isfinite(c.s) || c.s == 0.0)
        err("run.s", "must be finite and non-zero");
    if (c.deltas.empty())
        err("run.deltas", "empty");
    for (double d : c.deltas)
        if (!std::isfinite(d) || d < 0.0)
            err("run.deltas", "entries must be finite and non-negative");
    if (!std::is_sorted(c.deltas.begin(), c.deltas.end())) {
        std::sort(c.deltas.begin(), c.deltas.end());
        rep.warnings.push_back("run.deltas: not ascending, sorted");
    }
    if (c.horizons.empty())
        err("run.horizons", "empty");
    for (double t : c.horizons)
        if (!(t > 0.0) || !std::isfinite(t))
            err("run.horizons", "entries must be positive");
    if (!std::is_sorted(c.horizons.begin(), c.horizons.end())) {
        std::sort(c.horizons.begin(), c.horizons.end());
        rep.warnings.push_back("run.horizons: not ascending, sorted");
    }
    if (c.replicas < 1)
        err("run.replicas", "must be at least 1");
    if (!(c.dt_base > 0.0) || !std::isfinite(c.dt_base))
        err("run.dt_base", "must be positive");
    if (c.thin < 1)
        err("run.thin", "must be at least 1");
    if (c.workers < 0)
        err("run.workers", "must be non-negative");
    if (c.grid < 64)
        err("run.grid", "must be at least 64");
    if (!(c.z_max > 0.0) || !std::isfinite(c.z_max))
        err("scenario.z_max", "must be positive");
    if (!writable_dir(c.out_dir))
        err("run.out_dir", "'" + c.out_dir + "' is not writable");

    if (errors.empty()) {
        try {
            const Scenario sc = make_scenario(c);
            (void)sc.observable(c.observable);
        } catch (const std::exception& e) {
            err("run.observable", e.what());
        }
    }
    if (!errors.empty()) {
        std::string msg;
        for (const auto& e : errors)
            msg += (msg.empty() ? "" : "\n") + e;
        throw ValidationError(msg);
    }

    if (c.dt_base > 0.0 && !c.deltas.empty()) {
        const double dmax = c.deltas.back();
        if (dmax > 0.0 && 0.1 / std::max(1.0, dmax) < c.dt_base) {
            std::ostringstream w;
            w << "run.dt_base: " << c.dt_base << " exceeds the stability limit at delta=" << dmax
              << "; effective dt is 0.1/" << dmax << " = " << 0.1 / std::max(1.0, dmax);
            rep.warnings.push_back(w.str());
        }
    }
    return rep;
}

ExperimentConfig load_config(const std::string& path)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    auto text = [&](const char* key) { return tree.get_optional<std::string>(key); };
    auto read = [&](const char* key, auto& target) {
        if (const auto v = text(key)) {
            try {
                target = boost::lexical_cast<std::remove_reference_t<decltype(target)>>(*v);
            } catch (const boost::bad_lexical_cast&) {
                throw ValidationError(std::string(key) + ": cannot parse '" + *v + "'");
            }
        }
    };
    if (const auto v = text("scenario.name"))
        c.scenario = *v;
    if (const auto v = text("scenario.terms"))
        c.custom_terms = parse_poly_terms(*v);
    read("scenario.z_max", c.z_max);
    read("run.beta", c.beta);
    read("run.s", c.s);
    if (const auto v = text("run.deltas"))
        c.deltas = parse_list(*v, "run.deltas");
    if (const auto v = text("run.horizons"))
        c.horizons = parse_list(*v, "run.horizons");
    read("run.replicas", c.replicas);
    read("run.seed", c.seed);
    read("run.dt_base", c.dt_base);
    read("run.thin", c.thin);
    if (const auto v = text("run.observable"))
        c.observable = *v;
    if (const auto v = text("run.out_dir"))
        c.out_dir = *v;
    read("run.workers", c.workers);
    read("run.grid", c.grid);
    return c;
}

Scenario make_scenario(const ExperimentConfig& config)
{
    if (!config.custom_terms.empty())
        return make_polynomial_scenario(config.scenario, config.custom_terms);
    return scenario_by_name(config.scenario);
}

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

std::string trajectory_csv(const Trajectory& trajectory)
{
    std::string out = "t,x,y\n";
    out.reserve(out.size() + trajectory.size() * 64);
    for (std::size_t k = 0; k < trajectory.size(); ++k) {
        out += format_double(trajectory.times[k]);
        out += ',';
        out += format_double(trajectory.states[k].x);
        out += ',';
        out += format_double(trajectory.states[k].y);
        out += '\n';
    }
    return out;
}

namespace {

const char* kSweepHeader = "delta,t,kind,method,value,ci,n_batches,dt,seed\n";

// t is the nominal horizon of the cell; batch means may use slightly less.
void sweep_row(std::string& out, double t, const VarianceEstimate& e)
{
    out += format_double(e.delta) + ',' + format_double(t) + ',' + to_string(e.kind) + ',' +
           to_string(e.method) + ',' + format_double(e.value) + ',' + format_double(e.ci_halfwidth) + ',' +
           std::to_string(e.n_batches) + ',' + format_double(e.dt) + ',' + std::to_string(e.seed) + '\n';
}

}  // namespace

std::string sweep_csv(const SweepTable& table)
{
    std::string out = kSweepHeader;
    for (const auto& cell : table.cells)
        sweep_row(out, cell.t, cell.median);
    return out;
}

std::string sweep_replicas_csv(const SweepTable& table)
{
    std::string out = kSweepHeader;
    for (const auto& cell : table.cells)
        for (const auto& r : cell.replicas)
            sweep_row(out, cell.t, r.time_average);
    return out;
}

std::string coefficients_csv(const CoefficientTable& table)
{
    std::string out = "edge,z,T,A_hat,M,f_hat,drift,diffusion_var\n";
    for (const auto& ec : table.edges)
        for (std::size_t k = 0; k < ec.z_grid.size(); ++k)
            out += GraphTopology::edge_label(ec.edge_id) + ',' + format_double(ec.z_grid[k]) + ',' +
                   format_double(ec.T[k]) + ',' + format_double(ec.A_hat[k]) + ',' + format_double(ec.M[k]) + ',' +
                   format_double(ec.f_hat[k]) + ',' + format_double(ec.drift[k]) + ',' +
                   format_double(ec.diffusion_var[k]) + '\n';
    return out;
}

std::string graph_limit_csv_header() { return "scenario,beta,observable,sigma2_limit,grid,method\n"; }

std::string graph_limit_csv_row(const std::string& scenario, double beta, const std::string& observable,
                                const VarianceEstimate& estimate, int grid)
{
    return scenario + ',' + format_double(beta) + ',' + observable + ',' + format_double(estimate.value) + ',' +
           std::to_string(grid) + ',' + to_string(estimate.method) + '\n';
}

std::string topology_json(const GraphTopology& topology)
{
    using nlohmann::json;
    json doc;
    doc["scenario"] = topology.scenario().name();
    doc["z_max"] = topology.z_max();
    json vs = json::array();
    for (const auto& v : topology.vertices()) {
        json jv{{"id", v.id}, {"z", v.z}, {"kind", to_string(v.kind)}, {"edges", v.edges}};
        if (v.kind != VertexKind::truncation_cap)
            jv["location"] = {v.location.x, v.location.y};
        vs.push_back(jv);
    }
    json es = json::array();
    for (const auto& e : topology.edges())
        es.push_back({{"id", e.id},
                      {"label", GraphTopology::edge_label(e.id)},
                      {"z_lo", e.z_lo},
                      {"z_hi", e.z_hi},
                      {"lower", e.lower},
                      {"upper", e.upper},
                      {"minima", e.minima}});
    doc["vertices"] = vs;
    doc["edges"] = es;
    return doc.dump(2) + "\n";
}

std::uint64_t fnv1a64(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

bool Manifest::ok() const
{
    return std::all_of(entries.begin(), entries.end(), [](const ManifestEntry& e) { return e.ok; });
}

std::string Manifest::to_json() const
{
    using nlohmann::json;
    json doc;
    doc["preset"] = preset;
    doc["seed"] = seed;
    json files = json::array();
    for (const auto& e : entries) {
        json f{{"file", e.file}, {"status", e.ok ? "ok" : "failed"}};
        if (e.ok) {
            f["fnv1a64"] = e.hash;
            f["bytes"] = e.bytes;
        } else {
            f["error"] = e.error;
        }
        files.push_back(f);
    }
    doc["files"] = files;
    return doc.dump(2) + "\n";
}

std::vector<std::string> preset_names()
{
    return {"table1", "fig1_trajectories", "fig78_metastable", "fig1a_sweep", "graph_limits"};
}

namespace {

struct Job {
    std::string file;
    std::function<std::string()> produce;
};

Trajectory preset_trajectory(const Scenario& sc, double delta, Vec2 x0, double t, double row_dt, std::uint64_t seed)
{
    SimConfig cfg(GibbsSpec{sc, 0.1}, DriftField{sc, AntisymmetricMatrix(1.0), delta});
    cfg.x0 = x0;
    cfg.t_final = t;
    cfg.seed = seed;
    cfg.thin = std::max(1, static_cast<int>(std::llround(row_dt / cfg.effective_dt())));
    return simulate(cfg);
}

std::string delta_tag(double d)
{
    return "delta" + format_double(d);
}

std::vector<Job> preset_jobs(const std::string& name, std::uint64_t seed, int workers)
{
    std::vector<Job> jobs;
    if (name == "table1" || name == "fig1a_sweep") {
        const bool t1 = name == "table1";
        const std::vector<double> deltas = t1 ? std::vector<double>{0, 1, 100} : std::vector<double>{0, 1, 10, 100};
        const std::vector<double> horizons = t1 ? std::vector<double>{25, 100, 200, 300, 400, 500, 600}
                                                : std::vector<double>{25, 50, 100, 150, 200, 300, 400, 500, 600};
        auto table = std::make_shared<SweepTable>();
        auto run = [=]() {
            if (table->cells.empty()) {
                const Scenario sc = make_double_well();
                SweepOptions opt;
                opt.workers = workers;
                *table = delta_sweep(sc, sc.observable("f2"), 0.1, deltas, horizons, 8, seed, opt);
            }
        };
        const std::string stem = t1 ? "table1" : "fig1a";
        jobs.push_back({stem + ".csv", [=] { return run(), sweep_csv(*table); }});
        jobs.push_back({stem + "_replicas.csv", [=] { return run(), sweep_replicas_csv(*table); }});
    } else if (name == "fig1_trajectories") {
        for (double d : {0.0, 10.0})
            jobs.push_back({"fig1_" + delta_tag(d) + ".csv", [=] {
                                return trajectory_csv(preset_trajectory(make_bowl(), d, {1.0, 0.0}, 20.0, 0.01, seed));
                            }});
    } else if (name == "fig78_metastable") {
        for (double d : {0.0, 10.0, 100.0, 300.0})
            jobs.push_back({"fig78_" + delta_tag(d) + ".csv", [=] {
                                return trajectory_csv(
                                    preset_trajectory(make_double_well(), d, {-1.0, 0.0}, 200.0, 0.02, seed));
                            }});
    } else if (name == "graph_limits") {
        auto rows = std::make_shared<std::string>();
        for (const std::string sname : {"bowl", "double_well"}) {
            jobs.push_back({"coefficients_" + sname + ".csv", [=] {
                                const Scenario sc = scenario_by_name(sname);
                                const GraphTopology g = build_graph(sc);
                                const CoefficientTable t =
                                    tabulate_edge_coefficients(g, sc.observable("f2"), 0.1, 128, {}, workers);
                                *rows += graph_limit_csv_row(sname, 0.1, "f2", limiting_variance(t, g).estimate, 128);
                                return coefficients_csv(t);
                            }});
        }
        jobs.push_back({"graph_limits.csv", [=] { return graph_limit_csv_header() + *rows; }});
    } else {
        std::string known;
        for (const auto& n : preset_names())
            known += (known.empty() ? "" : ", ") + n;
        throw ValidationError("unknown preset '" + name + "' (valid: " + known + ")");
    }
    return jobs;
}

}  // namespace

Manifest run_preset(const std::string& name, std::uint64_t seed, const std::string& out_dir, int workers)
{
    std::vector<Job> jobs = preset_jobs(name, seed, workers);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!writable_dir(out_dir))
        throw ValidationError("run.out_dir: '" + out_dir + "' is not writable");
    Manifest m;
    m.preset = name;
    m.seed = seed;
    for (const auto& job : jobs) {
        ManifestEntry e;
        e.file = job.file;
        try {
            const std::string content = job.produce();
            write_file(fs::path(out_dir) / job.file, content);
            e.hash = hex64(fnv1a64(content));
            e.bytes = content.size();
        } catch (const std::exception& ex) {
            e.ok = false;
            e.error = ex.what();
        }
        m.entries.push_back(std::move(e));
    }
    write_file(fs::path(out_dir) / "manifest.json", m.to_json());
    return m;
}

}  // namespace irrlab
