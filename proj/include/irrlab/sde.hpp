#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "irrlab/drift.hpp"
#include "irrlab/potential.hpp"

namespace irrlab {

enum class Integrator {
    /// RK4-substepped flow of delta*C, then an Euler-Maruyama step of the
    /// reversible part. Stable for any delta at dt = 0.1/delta.
    split,
    /// Plain Euler-Maruyama on the full drift.
    euler_maruyama,
};

std::string to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& name);

struct SimConfig {
    GibbsSpec gibbs;
    DriftField drift;
    Vec2 x0{};
    double dt_base = 1e-3;
    double stability_factor = 0.1;
    double t_final = 1.0;
    int thin = 1;
    std::uint64_t seed = 0;
    Integrator integrator = Integrator::split;
    double divergence_bound = 1e6;
    /// Arc angle per RK4 substep of the split flow.
    double flow_substep = 0.025;

    SimConfig(GibbsSpec g, DriftField d) : gibbs(std::move(g)), drift(std::move(d)) {}

    /// Checks the invariants; beta = 0 is allowed (deterministic gradient flow).
    void validate() const;

    /// min(dt_base, stability_factor / max(1, delta)), then shrunk so an
    /// integer number of steps reaches t_final exactly.
    double effective_dt() const;
    std::int64_t n_steps() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec2> states;
    std::uint64_t seed = 0;
    double dt_effective = 0.0;
    int thin = 1;
    double delta = 0.0;

    std::size_t size() const { return states.size(); }
};

/// Single-threaded and deterministic in (seed, config).
/// Throws NumericalError when the state leaves the divergence bound.
Trajectory simulate(const SimConfig& config);

/// Block means of f along a path: the left Riemann average of f over each
/// run of `block_steps` steps after `burn_in` time. The full path is never
/// stored.
struct ObservablePath {
    std::vector<double> block_means;
    double block_time = 0.0;
    double dt_effective = 0.0;
    std::uint64_t seed = 0;
};

ObservablePath simulate_observable(const SimConfig& config, const Observable& f, double burn_in,
                                   std::int64_t block_steps);

struct ReplicaOutcome {
    std::optional<Trajectory> trajectory;
    std::uint64_t seed = 0;
    std::string error;

    bool ok() const { return trajectory.has_value(); }
};

/// Replica r runs with seed derive_stream_seed(config.seed, r). Result order is
/// the replica index whatever the worker count; a diverging replica is flagged
/// and the others are still returned.
std::vector<ReplicaOutcome> simulate_ensemble(const SimConfig& config, int n_replicas, int workers = 0);

/// One pass of the split or EM step; exposed for tests.
Vec2 sde_step(const SimConfig& config, Vec2 x, double dt, double xi0, double xi1);

}  // namespace irrlab
