#include "irrlab/sde.hpp"

#include <cmath>
#include <sstream>

#include "irrlab/parallel.hpp"
#include "irrlab/rng.hpp"

namespace irrlab {

std::string to_string(Integrator integrator)
{
    return integrator == Integrator::split ? "split" : "euler";
}

Integrator integrator_from_string(const std::string& name)
{
    if (name == "split")
        return Integrator::split;
    if (name == "euler" || name == "euler_maruyama" || name == "em")
        return Integrator::euler_maruyama;
    throw ValidationError("unknown integrator '" + name + "' (known: split, euler)");
}

void SimConfig::validate() const
{
    if (!(gibbs.beta >= 0.0) || !std::isfinite(gibbs.beta))
        throw ValidationError("beta must be finite and >= 0");
    drift.validate();
    if (!is_finite(x0))
        throw ValidationError("x0 must be finite");
    if (!(dt_base > 0.0) || !std::isfinite(dt_base))
        throw ValidationError("dt_base must be > 0");
    if (!(stability_factor > 0.0))
        throw ValidationError("stability_factor must be > 0");
    if (!(t_final >= 0.0) || !std::isfinite(t_final))
        throw ValidationError("t_final must be finite and >= 0");
    if (thin < 1)
        throw ValidationError("thin must be >= 1");
    if (t_final > 0.0 && thin * effective_dt() > t_final * (1.0 + 1e-12))
        throw ValidationError("thin * dt exceeds t_final");
    if (!(divergence_bound > 0.0))
        throw ValidationError("divergence_bound must be > 0");
    if (!(flow_substep > 0.0))
        throw ValidationError("flow_substep must be > 0");
}

namespace {

double raw_dt(const SimConfig& c)
{
    return std::min(c.dt_base, c.stability_factor / std::max(1.0, c.drift.delta));
}

}  // namespace

std::int64_t SimConfig::n_steps() const
{
    if (t_final == 0.0)
        return 0;
    return static_cast<std::int64_t>(std::ceil(t_final / raw_dt(*this) - 1e-9));
}

double SimConfig::effective_dt() const
{
    const auto n = n_steps();
    return n == 0 ? raw_dt(*this) : t_final / static_cast<double>(n);
}

Vec2 sde_step(const SimConfig& c, Vec2 x, double dt, double xi0, double xi1)
{
    const double delta = c.drift.delta;
    const double noise = std::sqrt(2.0 * c.gibbs.beta * dt);
    const Potential& pot = c.gibbs.scenario.potential();
    if (c.integrator == Integrator::euler_maruyama) {
        const Vec2 g = pot.gradient(x);
        const Vec2 drift = -g + delta * c.drift.s_matrix.apply(g);
        return x + dt * drift + Vec2{noise * xi0, noise * xi1};
    }
    if (delta > 0.0) {
        const int n_sub = std::max(1, static_cast<int>(std::ceil(delta * dt / c.flow_substep)));
        const double h = dt / n_sub;
        const auto f = [&](Vec2 q) { return delta * c.drift.s_matrix.apply(pot.gradient(q)); };
        for (int k = 0; k < n_sub; ++k) {
            const Vec2 k1 = f(x);
            const Vec2 k2 = f(x + 0.5 * h * k1);
            const Vec2 k3 = f(x + 0.5 * h * k2);
            const Vec2 k4 = f(x + h * k3);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    return x - dt * pot.gradient(x) + Vec2{noise * xi0, noise * xi1};
}

namespace {

// Calls visit(k, x_k) for k = 0..n_steps.
template <class Visit>
void integrate(const SimConfig& c, Visit&& visit)
{
    c.validate();
    const std::int64_t n = c.n_steps();
    const double dt = c.effective_dt();
    const CounterRng rng(c.seed);
    Vec2 x = c.x0;
    visit(std::int64_t{0}, x);
    for (std::int64_t k = 0; k < n; ++k) {
        const auto [xi0, xi1] = rng.normal_pair(static_cast<std::uint64_t>(k));
        x = sde_step(c, x, dt, xi0, xi1);
        if (!is_finite(x) || norm(x) > c.divergence_bound) {
            std::ostringstream msg;
            msg << "trajectory diverged at t = " << (k + 1) * dt << " (dt = " << dt << ", delta = " << c.drift.delta
                << "); reduce dt";
            throw NumericalError(msg.str());
        }
        visit(k + 1, x);
    }
}

}  // namespace

Trajectory simulate(const SimConfig& config)
{
    config.validate();
    Trajectory tr;
    tr.seed = config.seed;
    tr.dt_effective = config.effective_dt();
    tr.thin = config.thin;
    tr.delta = config.drift.delta;
    const auto kept = static_cast<std::size_t>(config.n_steps() / config.thin + 1);
    tr.times.reserve(kept);
    tr.states.reserve(kept);
    const double h = config.thin * tr.dt_effective;
    integrate(config, [&](std::int64_t k, Vec2 x) {
        if (k % config.thin == 0) {
            tr.times.push_back(static_cast<double>(tr.states.size()) * h);
            tr.states.push_back(x);
        }
    });
    return tr;
}

ObservablePath simulate_observable(const SimConfig& config, const Observable& f, double burn_in,
                                   std::int64_t block_steps)
{
    if (block_steps < 1)
        throw ValidationError("block_steps must be >= 1");
    if (!(burn_in >= 0.0))
        throw ValidationError("burn_in must be >= 0");
    ObservablePath out;
    out.dt_effective = config.effective_dt();
    out.seed = config.seed;
    out.block_time = static_cast<double>(block_steps) * out.dt_effective;
    const std::int64_t n = config.n_steps();
    const auto nb = static_cast<std::int64_t>(std::llround(burn_in / out.dt_effective));
    if (nb >= n)
        throw ValidationError("burn_in is not shorter than t_final");
    const std::int64_t n_blocks = (n - nb) / block_steps;
    out.block_means.reserve(static_cast<std::size_t>(n_blocks));
    double acc = 0.0;
    std::int64_t in_block = 0;
    integrate(config, [&](std::int64_t k, Vec2 x) {
        if (k < nb || static_cast<std::int64_t>(out.block_means.size()) >= n_blocks)
            return;
        acc += f(x);
        if (++in_block == block_steps) {
            out.block_means.push_back(acc / static_cast<double>(block_steps));
            acc = 0.0;
            in_block = 0;
        }
    });
    return out;
}

std::vector<ReplicaOutcome> simulate_ensemble(const SimConfig& config, int n_replicas, int workers)
{
    if (n_replicas < 1)
        throw ValidationError("n_replicas must be >= 1");
    config.validate();
    std::vector<ReplicaOutcome> out(static_cast<std::size_t>(n_replicas));
    parallel_for(out.size(), workers, [&](std::size_t r) {
        SimConfig c = config;
        c.seed = derive_stream_seed(config.seed, r);
        out[r].seed = c.seed;
        try {
            out[r].trajectory = simulate(c);
        } catch (const NumericalError& e) {
            out[r].error = e.what();
        }
    });
    return out;
}

}  // namespace irrlab
