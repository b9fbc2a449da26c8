#pragma once

#include <map>
#include <memory>
#include <vector>

#include "irrlab/contour.hpp"
#include "irrlab/reeb_graph.hpp"

namespace irrlab {

/// Invariant density of the fast flow on a level set. With C = S grad U and
/// the standard S, |C| = |grad U| and the density is constant.
enum class MChoice { lebesgue_constant };

struct ContourQuantities {
    double z = 0.0;
    double T = 0.0;       // closed integral of 1/|grad U|
    double A_hat = 0.0;   // 2 beta * closed integral of |grad U|
    double f_hat = 0.0;   // (closed integral of f/|grad U|) / T
    double M = 0.0;       // area integral of Laplacian U over the enclosed component
    double M_prime = 0.0; // closed integral of Laplacian U / |grad U|, i.e. dM/dz
    double area = 0.0;
    std::size_t n_points = 0;
};

struct AveragerOptions {
    ContourOptions contour{};
    /// Points of the analytic parametrization, when the scenario has one.
    int analytic_points = 4096;
    /// Levels closer than this to a vertex value are rejected.
    double vertex_exclusion = 1e-4;
};

/// Averages over the level component d_i(z) of edge `edge_id`.
ContourQuantities contour_quantities(const GraphTopology& topology, int edge_id, double z, const Observable& f,
                                     double beta, const AveragerOptions& options = {});

/// M_i(z) alone.
double interior_area_laplacian(const GraphTopology& topology, int edge_id, double z,
                               const AveragerOptions& options = {});

struct GluingWeights {
    int vertex_id = 0;
    std::map<int, double> b;  // edge id -> weight
    /// Relative gap between the extrapolations from offsets {1,2} and {2,4}.
    std::map<int, double> extrapolation_gap;
    bool flagged = false;
};

/// b_jk: limit of A_hat along each incident edge at a saddle, by linear
/// extrapolation from offsets {1, 2, 4} * 1e-3 * edge length. Non-saddle
/// vertices give an empty map.
GluingWeights gluing_weights(const GraphTopology& topology, int vertex_id, double beta,
                             const AveragerOptions& options = {});

/// Monotone cubic interpolation with linear extrapolation past the ends.
class Interpolant {
public:
    Interpolant() = default;
    Interpolant(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    double prime(double x) const;
    bool empty() const { return !impl_; }

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

/// Tabulated averaged coefficients of one edge plus interpolants.
struct EdgeCoefficients {
    int edge_id = 0;
    double z_lo = 0.0;
    double z_hi = 0.0;
    double beta = 0.1;
    MChoice m_choice = MChoice::lebesgue_constant;

    std::vector<double> z_grid;
    std::vector<double> T;
    std::vector<double> A_hat;
    std::vector<double> M;
    std::vector<double> M_prime;     // contour integral
    std::vector<double> M_prime_fd;  // centered differences of M, cross-check
    std::vector<double> f_hat;
    std::vector<double> drift;
    std::vector<double> diffusion_var;

    /// T ~ a log(1/|z - z_v|) at a saddle end; zero at other ends.
    double log_coeff_lo = 0.0;
    double log_coeff_hi = 0.0;
    /// The same for T * f_hat: log coefficient times f at the saddle.
    double f_log_coeff_lo = 0.0;
    double f_log_coeff_hi = 0.0;

    double T_at(double z) const;
    double T_regular_at(double z) const { return check(z), t_reg_(z); }
    double M_at(double z) const { return check(z), m_(z); }
    double M_prime_at(double z) const { return check(z), mp_(z); }
    double A_hat_at(double z) const { return check(z), a_(z); }
    double f_hat_at(double z) const;
    double drift_at(double z) const;
    double diffusion_var_at(double z) const;

    struct Local {
        double T, drift, diffusion_var, f_hat;
    };
    /// All step coefficients at one level, sharing the T evaluation.
    Local local(double z) const;

    /// Builds interpolants from the tabulated columns.
    void finalize();

private:
    void check(double z) const;
    double singular_part(double z, double lo, double hi) const;

    Interpolant t_reg_, m_, mp_, a_, tf_reg_;
};

struct CoefficientTable {
    std::vector<EdgeCoefficients> edges;
    /// One entry per interior saddle, in vertex order.
    std::vector<GluingWeights> gluing;
    double beta = 0.1;
    std::string observable;
};

/// Chebyshev-Lobatto grid of n_grid levels per edge on
/// [z_lo + off, z_hi - off], off = 1e-3 * edge length. Saddle gluing
/// weights are computed alongside.
CoefficientTable tabulate_edge_coefficients(const GraphTopology& topology, const Observable& f, double beta,
                                            int n_grid, const AveragerOptions& options = {}, int workers = 0);

}  // namespace irrlab
