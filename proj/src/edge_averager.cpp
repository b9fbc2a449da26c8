#include "irrlab/edge_averager.hpp"

// pchip.hpp in older Boost calls isnan unqualified
#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "irrlab/parallel.hpp"

namespace irrlab {

namespace {

void check_level(const GraphTopology& topology, int edge_id, double z, const AveragerOptions& options)
{
    const GraphEdge& e = topology.edge(edge_id);
    if (!std::isfinite(z) || z <= e.z_lo || z >= e.z_hi) {
        std::ostringstream msg;
        msg << "level " << z << " outside edge " << GraphTopology::edge_label(edge_id) << " (" << e.z_lo << ", "
            << e.z_hi << ")";
        throw ValidationError(msg.str());
    }
    for (const auto& v : topology.vertices()) {
        if (std::abs(z - v.z) < options.vertex_exclusion) {
            std::ostringstream msg;
            msg << "level " << z << " within " << options.vertex_exclusion << " of vertex value " << v.z;
            throw ValidationError(msg.str());
        }
    }
}

LevelContour level_contour(const GraphTopology& topology, int edge_id, double z, const AveragerOptions& options)
{
    const Scenario& sc = topology.scenario();
    const Vec2 seed = topology.edge_seed(edge_id);
    if (sc.analytic_contour())
        return analytic_level_contour(sc, z, *sc.analytic_contour(), options.analytic_points, seed, options.contour);
    return extract_level_contour(sc, z, seed, options.contour);
}

// One-sided evaluation near a vertex skips the exclusion check.
ContourQuantities quantities_unchecked(const GraphTopology& topology, int edge_id, double z, const Observable* f,
                                       double beta, const AveragerOptions& options)
{
    const Scenario& sc = topology.scenario();
    const LevelContour c = level_contour(topology, edge_id, z, options);
    std::vector<std::function<double(Vec2)>> gs;
    gs.emplace_back([&](Vec2 p) { return 1.0 / norm(sc.grad_u(p)); });
    gs.emplace_back([&](Vec2 p) { return norm(sc.grad_u(p)); });
    gs.emplace_back([&](Vec2 p) { return sc.laplacian_u(p) / norm(sc.grad_u(p)); });
    if (f)
        gs.emplace_back([&](Vec2 p) { return (*f)(p) / norm(sc.grad_u(p)); });
    const auto r = contour_integrals(sc, c, gs);

    ContourQuantities q;
    q.z = z;
    q.T = r[0];
    q.A_hat = 2.0 * beta * r[1];
    q.M_prime = r[2];
    q.f_hat = f ? r[3] / r[0] : 0.0;
    q.M = c.interior_laplacian;
    q.area = c.interior_area;
    q.n_points = c.points.size();
    if (!(q.T > 0.0) || !(q.M > 0.0) || !std::isfinite(q.A_hat)) {
        std::ostringstream msg;
        msg << "non-positive averaged coefficient on edge " << GraphTopology::edge_label(edge_id) << " at z=" << z
            << " (T=" << q.T << ", M=" << q.M << ")";
        throw NumericalError(msg.str());
    }
    return q;
}

std::vector<double> chebyshev_lobatto(double a, double b, int n)
{
    std::vector<double> z(static_cast<std::size_t>(n));
    const double c = 0.5 * (a + b);
    const double r = 0.5 * (b - a);
    for (int k = 0; k < n; ++k)
        z[static_cast<std::size_t>(k)] = c - r * std::cos(std::numbers::pi * k / (n - 1));
    z.front() = a;
    z.back() = b;
    return z;
}

double saddle_log_coeff(const GraphVertex& v, bool upper_side)
{
    if (v.kind != VertexKind::interior_saddle)
        return 0.0;
    // one branch of the level set passes the saddle from below, two from above
    const double branches = upper_side ? 2.0 : 1.0;
    return branches / std::sqrt(std::abs(v.hessian_det));
}

}  // namespace

ContourQuantities contour_quantities(const GraphTopology& topology, int edge_id, double z, const Observable& f,
                                     double beta, const AveragerOptions& options)
{
    check_level(topology, edge_id, z, options);
    return quantities_unchecked(topology, edge_id, z, &f, beta, options);
}

double interior_area_laplacian(const GraphTopology& topology, int edge_id, double z, const AveragerOptions& options)
{
    check_level(topology, edge_id, z, options);
    return level_contour(topology, edge_id, z, options).interior_laplacian;
}

GluingWeights gluing_weights(const GraphTopology& topology, int vertex_id, double beta, const AveragerOptions& options)
{
    GluingWeights out;
    out.vertex_id = vertex_id;
    const GraphVertex& v = topology.vertex(vertex_id);
    if (v.kind != VertexKind::interior_saddle)
        return out;
    for (const int eid : v.edges) {
        const GraphEdge& e = topology.edge(eid);
        const double off = 1e-3 * e.length();
        const double sign = e.lower == vertex_id ? 1.0 : -1.0;
        double a[3];
        for (int k = 0; k < 3; ++k)
            a[k] = quantities_unchecked(topology, eid, v.z + sign * off * (1 << k), nullptr, beta, options).A_hat;
        const double b12 = 2.0 * a[0] - a[1];
        const double b24 = 2.0 * a[1] - a[2];
        out.b[eid] = b12;
        const double gap = std::abs(b12 - b24) / std::max(std::abs(b12), 1e-300);
        out.extrapolation_gap[eid] = gap;
        if (gap > 0.02)
            out.flagged = true;
    }
    return out;
}

struct Interpolant::Impl {
    boost::math::interpolators::pchip<std::vector<double>> spline;
    double x0, x1, y0, y1, d0, d1;
};

Interpolant::Interpolant(std::vector<double> x, std::vector<double> y)
{
    if (x.size() != y.size() || x.size() < 4)
        throw ValidationError("interpolant needs at least 4 matching points");
    const double x0 = x.front(), x1 = x.back(), y0 = y.front(), y1 = y.back();
    boost::math::interpolators::pchip<std::vector<double>> s(std::move(x), std::move(y));
    const double d0 = s.prime(x0);
    const double d1 = s.prime(x1);
    impl_ = std::make_shared<const Impl>(Impl{std::move(s), x0, x1, y0, y1, d0, d1});
}

double Interpolant::operator()(double x) const
{
    if (x < impl_->x0)
        return impl_->y0 + impl_->d0 * (x - impl_->x0);
    if (x > impl_->x1)
        return impl_->y1 + impl_->d1 * (x - impl_->x1);
    return impl_->spline(x);
}

double Interpolant::prime(double x) const
{
    if (x < impl_->x0)
        return impl_->d0;
    if (x > impl_->x1)
        return impl_->d1;
    return impl_->spline.prime(x);
}

void EdgeCoefficients::check(double z) const
{
    if (!(z > z_lo && z < z_hi)) {
        std::ostringstream msg;
        msg << "coefficient interpolation out of range: z=" << z << " on " << GraphTopology::edge_label(edge_id)
            << " (" << z_lo << ", " << z_hi << ")";
        throw NumericalError(msg.str());
    }
}

double EdgeCoefficients::singular_part(double z, double lo, double hi) const
{
    double s = 0.0;
    if (lo != 0.0)
        s += lo * std::log(1.0 / (z - z_lo));
    if (hi != 0.0)
        s += hi * std::log(1.0 / (z_hi - z));
    return s;
}

double EdgeCoefficients::T_at(double z) const
{
    check(z);
    return t_reg_(z) + singular_part(z, log_coeff_lo, log_coeff_hi);
}

// T f_hat shares the log singularity of T, weighted by f at the saddle, so
// the ratio is formed after interpolating both regular parts.
double EdgeCoefficients::f_hat_at(double z) const
{
    return (tf_reg_(z) + singular_part(z, f_log_coeff_lo, f_log_coeff_hi)) / T_at(z);
}

double EdgeCoefficients::drift_at(double z) const
{
    return (-M_at(z) + beta * M_prime_at(z)) / T_at(z);
}

double EdgeCoefficients::diffusion_var_at(double z) const
{
    return A_hat_at(z) / T_at(z);
}

EdgeCoefficients::Local EdgeCoefficients::local(double z) const
{
    const double t = T_at(z);
    return {t, (-m_(z) + beta * mp_(z)) / t, a_(z) / t,
            (tf_reg_(z) + singular_part(z, f_log_coeff_lo, f_log_coeff_hi)) / t};
}

void EdgeCoefficients::finalize()
{
    std::vector<double> t_reg(z_grid.size()), tf_reg(z_grid.size());
    for (std::size_t k = 0; k < z_grid.size(); ++k) {
        t_reg[k] = T[k] - singular_part(z_grid[k], log_coeff_lo, log_coeff_hi);
        tf_reg[k] = T[k] * f_hat[k] - singular_part(z_grid[k], f_log_coeff_lo, f_log_coeff_hi);
    }
    t_reg_ = Interpolant(z_grid, std::move(t_reg));
    tf_reg_ = Interpolant(z_grid, std::move(tf_reg));
    m_ = Interpolant(z_grid, M);
    mp_ = Interpolant(z_grid, M_prime);
    a_ = Interpolant(z_grid, A_hat);
}

CoefficientTable tabulate_edge_coefficients(const GraphTopology& topology, const Observable& f, double beta,
                                            int n_grid, const AveragerOptions& options, int workers)
{
    if (n_grid < 64)
        throw ValidationError("n_grid must be at least 64");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw ValidationError("beta must be positive");

    CoefficientTable table;
    table.beta = beta;
    table.observable = f.name;
    const auto& edges = topology.edges();
    table.edges.resize(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const GraphEdge& e = edges[i];
        EdgeCoefficients& ec = table.edges[i];
        ec.edge_id = e.id;
        ec.z_lo = e.z_lo;
        ec.z_hi = e.z_hi;
        ec.beta = beta;
        const double off = 1e-3 * e.length();
        ec.z_grid = chebyshev_lobatto(e.z_lo + off, e.z_hi - off, n_grid);
        ec.log_coeff_lo = saddle_log_coeff(topology.vertex(e.lower), true);
        ec.log_coeff_hi = saddle_log_coeff(topology.vertex(e.upper), false);
        if (ec.log_coeff_lo != 0.0)
            ec.f_log_coeff_lo = ec.log_coeff_lo * f(topology.vertex(e.lower).location);
        if (ec.log_coeff_hi != 0.0)
            ec.f_log_coeff_hi = ec.log_coeff_hi * f(topology.vertex(e.upper).location);
        for (auto* col : {&ec.T, &ec.A_hat, &ec.M, &ec.M_prime, &ec.M_prime_fd, &ec.f_hat, &ec.drift,
                          &ec.diffusion_var})
            col->assign(ec.z_grid.size(), 0.0);
    }

    const std::size_t n = static_cast<std::size_t>(n_grid);
    parallel_for(edges.size() * n, workers, [&](std::size_t idx) {
        EdgeCoefficients& ec = table.edges[idx / n];
        const std::size_t k = idx % n;
        const ContourQuantities q = quantities_unchecked(topology, ec.edge_id, ec.z_grid[k], &f, beta, options);
        ec.T[k] = q.T;
        ec.A_hat[k] = q.A_hat;
        ec.M[k] = q.M;
        ec.M_prime[k] = q.M_prime;
        ec.f_hat[k] = q.f_hat;
        ec.drift[k] = (-q.M + beta * q.M_prime) / q.T;
        ec.diffusion_var[k] = q.A_hat / q.T;
    });

    for (auto& ec : table.edges) {
        const auto& z = ec.z_grid;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t a = k == 0 ? 0 : k - 1;
            const std::size_t b = k + 1 == n ? n - 1 : k + 1;
            ec.M_prime_fd[k] = (ec.M[b] - ec.M[a]) / (z[b] - z[a]);
        }
        ec.finalize();
    }
    for (const auto& v : topology.vertices())
        if (v.kind == VertexKind::interior_saddle)
            table.gluing.push_back(gluing_weights(topology, v.id, beta, options));
    return table;
}

}  // namespace irrlab
