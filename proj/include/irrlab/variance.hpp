#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "irrlab/sde.hpp"
#include "irrlab/stats.hpp"

namespace irrlab {

enum class VarianceKind { var_of_time_average, asymptotic_sigma2 };
enum class VarianceMethod { batch_means, replica_spread, poisson_oracle, graph_limit };

std::string to_string(VarianceKind kind);
std::string to_string(VarianceMethod method);

struct VarianceEstimate {
    double value = 0.0;
    VarianceKind kind = VarianceKind::var_of_time_average;
    double t_horizon = 0.0;
    int n_batches = 0;
    double ci_halfwidth = 0.0;  // 95% interval for `value`
    VarianceMethod method = VarianceMethod::batch_means;
    double delta = 0.0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    /// Set by estimators that self-check (Richardson, extrapolation).
    bool flagged = false;
    std::string diagnostic;
};

/// Left Riemann time average of f over the kept states.
double ergodic_average(const Trajectory& trajectory, const Observable& f);

struct BatchMeans {
    VarianceEstimate time_average;  // kind var_of_time_average
    VarianceEstimate sigma2;        // kind asymptotic_sigma2 = time_average * t_horizon
    double mean = 0.0;
    double mean_ci = 0.0;  // Student-t 95% half-width
};

/// Default batch count: floor(sqrt(n)) capped at 50.
int default_batch_count(std::size_t n_samples);

/// Batch means over equally spaced samples `values` (spacing sample_dt).
/// The leading remainder is discarded so all batches are equal.
/// n_batches = 0 picks the default.
BatchMeans batch_means_variance(std::span<const double> values, double sample_dt, int n_batches);

/// Same, on f evaluated along a trajectory after `burn_in` time.
BatchMeans batch_means_variance(const Trajectory& trajectory, const Observable& f, int n_batches,
                                double burn_in = 0.0);

struct SweepOptions {
    double burn_in = 50.0;
    double dt_base = 1e-3;
    double s = 1.0;
    Vec2 x0{-1.0, 0.0};
    int n_batches = 0;
    /// Samples are block means over this many steps (memory bound only).
    std::int64_t block_steps = 10;
    int workers = 0;
    Integrator integrator = Integrator::split;
};

struct SweepCell {
    double delta = 0.0;
    double t = 0.0;
    /// One estimate per replica, replica order.
    std::vector<BatchMeans> replicas;
    std::vector<std::uint64_t> seeds;
    /// Median over replicas of the var_of_time_average value and its CI.
    VarianceEstimate median;
};

struct SweepTable {
    std::vector<SweepCell> cells;  // delta-major, then t
    std::uint64_t seed = 0;
};

/// Full (delta, t) cross product. Replica r uses seed derive_stream_seed(seed, r)
/// for every delta (common random numbers), and each horizon is estimated on
/// the prefix of one path of length burn_in + max(horizons).
SweepTable delta_sweep(const Scenario& scenario, const Observable& f, double beta, std::vector<double> deltas,
                       std::vector<double> horizons, int n_replicas, std::uint64_t seed,
                       const SweepOptions& options = {});

struct PoissonOracleOptions {
    Box box = Box::square(2.5);
    int grid_n = 256;
    bool richardson_check = true;
};

/// Finite-volume solve of -L_delta Phi = f - fbar with zero-flux boundary and
/// sum p Phi = 0; sigma^2 = 2 sum p Phi (f - fbar).
VarianceEstimate poisson_oracle_2d(const GibbsSpec& gibbs, const DriftField& drift, const Observable& f,
                                   const PoissonOracleOptions& options = {});

/// Rectangular partition into cells with x-edges and y-edges.
struct CellPartition {
    std::vector<double> x_edges;
    std::vector<double> y_edges;

    int n_cells() const { return static_cast<int>((x_edges.size() + 1) * (y_edges.size() + 1)); }
    int cell(Vec2 p) const;
};

/// Quantile partition of a reference sample: nx x-bins by ny y-bins.
CellPartition quantile_partition(std::span<const Vec2> reference, int nx, int ny);

struct InvarianceTest {
    stats::WaldResult wald;
    CellPartition partition;
    std::size_t n_sde = 0;
    std::size_t n_reference = 0;
};

/// Two-sample cell-frequency test of SDE states against i.i.d. reference
/// draws. Each entry of `paths` is one replica's post-burn-in state sequence,
/// cut into `batches_per_path` contiguous batches.
InvarianceTest gibbs_invariance_test(const std::vector<std::vector<Vec2>>& paths, std::span<const Vec2> reference,
                                     int batches_per_path, int nx = 4, int ny = 3);

}  // namespace irrlab
