#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "irrlab/graph_diffusion.hpp"
#include "irrlab/variance.hpp"

namespace irrlab {

struct ExperimentConfig {
    std::string scenario = "double_well";
    /// Non-empty: a polynomial scenario named `scenario` built from these terms.
    std::vector<PolyTerm> custom_terms;
    double beta = 0.1;
    double s = 1.0;
    std::vector<double> deltas{0.0};
    std::vector<double> horizons{25, 100, 200, 300, 400, 500, 600};
    int replicas = 8;
    std::uint64_t seed = 0;
    double dt_base = 1e-3;
    int thin = 1;
    std::string observable = "f2";
    std::string out_dir = ".";
    int workers = 0;
    double z_max = 4.0;
    int grid = 128;
};

struct ConfigReport {
    ExperimentConfig config;
    std::vector<std::string> warnings;
};

/// Normalizes (sorts deltas and horizons) and checks every field. All
/// violations are collected into one ValidationError, one "field: reason"
/// per line; nothing is applied on failure.
ConfigReport validate_config(const ExperimentConfig& config);

/// Reads an INI file:
///   [scenario] name, terms ("c:i:j, ..."), z_max
///   [run] beta, s, deltas, horizons, replicas, seed, dt_base, thin,
///         observable, out_dir, workers, grid
/// Missing keys keep their defaults.
ExperimentConfig load_config(const std::string& path);

Scenario make_scenario(const ExperimentConfig& config);

/// 17 significant digits, locale independent; "inf"/"nan" for non-finite.
std::string format_double(double v);

std::string trajectory_csv(const Trajectory& trajectory);
/// One row per cell: the replica median.
std::string sweep_csv(const SweepTable& table);
/// One row per replica and cell.
std::string sweep_replicas_csv(const SweepTable& table);
std::string coefficients_csv(const CoefficientTable& table);
std::string graph_limit_csv_header();
std::string graph_limit_csv_row(const std::string& scenario, double beta, const std::string& observable,
                                const VarianceEstimate& estimate, int grid);
/// Vertices, edges and adjacency as JSON.
std::string topology_json(const GraphTopology& topology);

std::uint64_t fnv1a64(const std::string& bytes);

struct ManifestEntry {
    std::string file;
    std::string hash;  // FNV-1a 64, hex
    std::size_t bytes = 0;
    bool ok = true;
    std::string error;
};

struct Manifest {
    std::string preset;
    std::uint64_t seed = 0;
    std::vector<ManifestEntry> entries;

    bool ok() const;
    std::string to_json() const;
};

std::vector<std::string> preset_names();

/// Runs a named reproduction preset into out_dir and writes manifest.json
/// there. A failing file is recorded in the manifest; the others still run.
Manifest run_preset(const std::string& name, std::uint64_t seed, const std::string& out_dir, int workers = 0);

}  // namespace irrlab
