#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "irrlab/edge_averager.hpp"
#include "irrlab/sde.hpp"
#include "irrlab/variance.hpp"

namespace irrlab {

/// Integral of g over [a, b] by composite 10-point Gauss-Legendre on panels
/// no wider than `panel`, with geometric grading toward the flagged ends
/// (for the logarithmic singularity of T at saddles).
double graded_integral(const std::function<double(double)>& g, double a, double b, bool grade_lo, bool grade_hi,
                       double panel);

/// Projection of the Gibbs measure onto the graph: density on edge i
/// proportional to exp(-(z - z_min)/beta) T_i(z).
/// Keeps references to table and topology, which must outlive it.
class GraphMeasure {
public:
    GraphMeasure(const CoefficientTable& table, const GraphTopology& topology);

    double beta() const { return beta_; }
    double z_ref() const { return z_ref_; }
    /// Sum over edges of the integral of exp(-(z - z_ref)/beta) T_i(z).
    double normalization() const { return z_; }
    /// Probability of each edge; sums to 1.
    const std::vector<double>& edge_mass() const { return mass_; }

    double density(int edge_id, double z) const;
    /// Integral of g(edge, z) d(mu).
    double expectation(const std::function<double(int, double)>& g) const;
    /// Mean of f_hat under mu.
    double f_bar() const;

    /// Unnormalized integral of exp(-(z - z_ref)/beta) T(z) g(z) over [a, b] on one edge.
    double weighted_integral(int edge_id, double a, double b, const std::function<double(double)>& g) const;

private:
    const CoefficientTable* table_;
    const GraphTopology* topology_;
    double beta_;
    double z_ref_;
    double z_ = 0.0;
    std::vector<double> mass_;
};

struct EdgeSolution {
    int edge_id = 0;
    std::vector<double> z;    // vertex, grid nodes, vertex
    std::vector<double> phi;
};

struct GraphPoissonSolution {
    std::vector<EdgeSolution> edges;
    std::map<int, double> vertex_phi;
    double f_bar = 0.0;
    double sigma2 = 0.0;
    /// max over saddles of |sum of signed b D Phi| / largest term.
    double gluing_residual = 0.0;
    double normalization = 0.0;

    double phi_at(int edge_id, double z) const;
};

struct PoissonOptions {
    /// Tabulation intervals are split so no cell exceeds spacing * beta.
    double spacing = 0.02;
};

/// Finite-volume solve of -L Phi = f_hat - f_bar on the refined tabulation
/// grid with continuity and flux gluing at saddles, reflecting ends at minima
/// and at the cap, and the constant fixed by integral Phi d(mu) = 0.
GraphPoissonSolution solve_graph_poisson(const CoefficientTable& table, const GraphTopology& topology,
                                         const PoissonOptions& options = {});

struct GraphLimit {
    VarianceEstimate estimate;  // method graph_limit, kind asymptotic_sigma2
    GraphPoissonSolution solution;
    bool gluing_flagged = false;
};

/// sigma^2_f in the large-delta limit, 2 integral Phi (f_hat - f_bar) d(mu).
GraphLimit limiting_variance(const CoefficientTable& table, const GraphTopology& topology,
                             const PoissonOptions& options = {});

/// Builds the graph (cap at z_max) and the table on grid_n levels per edge.
GraphLimit limiting_variance(const Scenario& scenario, const Observable& f, double beta, int grid_n,
                             double z_max = 4.0, int workers = 0);

struct VertexEvent {
    double t = 0.0;
    int vertex = 0;
    int edge = 0;
};

struct GraphPath {
    std::vector<double> times;
    std::vector<GraphPoint> points;
    std::uint64_t seed = 0;
    std::vector<VertexEvent> vertex_events;
};

struct GraphSimOptions {
    double dt = 1e-3;
    double t_final = 1.0;
    std::uint64_t seed = 0;
    /// rho, in units of z.
    double vertex_offset = 1e-3;
    std::int64_t thin = 1;

    void validate() const;
};

/// Euler-Maruyama on dz = drift dt + sqrt(diffusion_var) dW inside edges.
/// On reaching within rho of a saddle the path restarts at offset rho on
/// incident edge k with probability b_k / sum b; minima and the cap reflect.
GraphPath simulate_graph(const CoefficientTable& table, const GraphTopology& topology, GraphPoint y0,
                         const GraphSimOptions& options);

/// Block means of f_hat(Y) after burn_in, for batch-means variance.
ObservablePath simulate_graph_observable(const CoefficientTable& table, const GraphTopology& topology,
                                         GraphPoint y0, const GraphSimOptions& options, double burn_in,
                                         std::int64_t block_steps);

/// Final points of n independent paths; replica r uses seed derive_stream_seed(seed, r).
std::vector<GraphPoint> graph_endpoints(const CoefficientTable& table, const GraphTopology& topology, GraphPoint y0,
                                        const GraphSimOptions& options, int n_replicas, int workers = 0);

/// Sort key that orders points edge by edge, for edge-resolved KS distances.
double edge_resolved_key(const GraphTopology& topology, GraphPoint p);

}  // namespace irrlab
