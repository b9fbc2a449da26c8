#include "irrlab/graph_diffusion.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "irrlab/parallel.hpp"
#include "irrlab/rng.hpp"

namespace irrlab {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 10>;

bool is_saddle(const GraphTopology& g, int vertex) { return g.vertex(vertex).kind == VertexKind::interior_saddle; }

const EdgeCoefficients& coeffs(const CoefficientTable& table, int edge_id)
{
    for (const auto& ec : table.edges)
        if (ec.edge_id == edge_id)
            return ec;
    throw ValidationError("no coefficients for edge " + GraphTopology::edge_label(edge_id));
}

const GluingWeights& gluing_at(const CoefficientTable& table, int vertex)
{
    for (const auto& gw : table.gluing)
        if (gw.vertex_id == vertex)
            return gw;
    throw ValidationError("no gluing weights for vertex " + std::to_string(vertex));
}

}  // namespace

double graded_integral(const std::function<double(double)>& g, double a, double b, bool grade_lo, bool grade_hi,
                       double panel)
{
    if (!(b > a))
        return 0.0;
    std::vector<double> cuts;
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
    for (int k = 0; k <= n; ++k)
        cuts.push_back(a + (b - a) * k / n);
    const double first = cuts[1] - a, last = b - cuts[static_cast<std::size_t>(n - 1)];
    auto add_graded = [&](double end, double width, double dir) {
        // stop before the nodes would round onto the singular end
        while ((width *= 0.15) > 1e-11 * (1.0 + std::abs(end)))
            cuts.push_back(end + dir * width);
    };
    if (grade_lo)
        add_graded(a, first, 1.0);
    if (grade_hi)
        add_graded(b, last, -1.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        if (cuts[k + 1] > cuts[k])
            sum += Gauss::integrate(g, cuts[k], cuts[k + 1]);
    return sum;
}

GraphMeasure::GraphMeasure(const CoefficientTable& table, const GraphTopology& topology)
    : table_(&table), topology_(&topology), beta_(table.beta), z_ref_(topology.z_min())
{
    mass_.resize(topology.edges().size());
    for (const auto& e : topology.edges()) {
        mass_[static_cast<std::size_t>(e.id)] = weighted_integral(e.id, e.z_lo, e.z_hi, [](double) { return 1.0; });
        z_ += mass_[static_cast<std::size_t>(e.id)];
    }
    if (!(z_ > 0.0) || !std::isfinite(z_))
        throw NumericalError("graph measure has no mass");
    for (double& m : mass_)
        m /= z_;
}

double GraphMeasure::weighted_integral(int edge_id, double a, double b, const std::function<double(double)>& g) const
{
    const GraphEdge& e = topology_->edge(edge_id);
    const EdgeCoefficients& ec = coeffs(*table_, edge_id);
    const bool lo = a <= e.z_lo && is_saddle(*topology_, e.lower);
    const bool hi = b >= e.z_hi && is_saddle(*topology_, e.upper);
    return graded_integral(
        [&](double z) { return std::exp(-(z - z_ref_) / beta_) * ec.T_at(z) * g(z); }, a, b, lo, hi,
        0.25 * beta_);
}

double GraphMeasure::density(int edge_id, double z) const
{
    return std::exp(-(z - z_ref_) / beta_) * coeffs(*table_, edge_id).T_at(z) / z_;
}

double GraphMeasure::expectation(const std::function<double(int, double)>& g) const
{
    double sum = 0.0;
    for (const auto& e : topology_->edges())
        sum += weighted_integral(e.id, e.z_lo, e.z_hi, [&](double z) { return g(e.id, z); });
    return sum / z_;
}

double GraphMeasure::f_bar() const
{
    return expectation([&](int edge, double z) { return coeffs(*table_, edge).f_hat_at(z); });
}

double GraphPoissonSolution::phi_at(int edge_id, double z) const
{
    for (const auto& es : edges) {
        if (es.edge_id != edge_id)
            continue;
        if (z <= es.z.front())
            return es.phi.front();
        if (z >= es.z.back())
            return es.phi.back();
        const auto it = std::upper_bound(es.z.begin(), es.z.end(), z);
        const auto k = static_cast<std::size_t>(it - es.z.begin());
        const double w = (z - es.z[k - 1]) / (es.z[k] - es.z[k - 1]);
        return (1.0 - w) * es.phi[k - 1] + w * es.phi[k];
    }
    throw ValidationError("no solution on edge " + GraphTopology::edge_label(edge_id));
}

GraphPoissonSolution solve_graph_poisson(const CoefficientTable& table, const GraphTopology& topology,
                                         const PoissonOptions& options)
{
    if (!(options.spacing > 0.0))
        throw ValidationError("solve grid spacing must be positive");
    const GraphMeasure mu(table, topology);
    const double beta = table.beta;
    const double zr = mu.z_ref();
    const auto& vertices = topology.vertices();
    const auto& edges = topology.edges();
    const int nv = static_cast<int>(vertices.size());

    // solve grid: tabulation nodes, intervals split to at most spacing * beta;
    // near a minimum the conductance ~ 1/(z - z_min), so cells also stay
    // below a tenth of their distance to it
    std::vector<std::vector<double>> grid(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& zt = coeffs(table, edges[i].id).z_grid;
        const bool from_min = !is_saddle(topology, edges[i].lower);
        if (from_min) {
            // geometric nodes down toward the minimum (extrapolated coefficients),
            // so the energy of the gap below the first tabulated level is kept
            const double d = zt.front() - edges[i].z_lo;
            std::vector<double> below;
            for (double r = 0.9; r > 1e-6; r *= 0.9)
                below.push_back(edges[i].z_lo + r * d);
            grid[i].assign(below.rbegin(), below.rend());
        }
        grid[i].push_back(zt.front());
        for (std::size_t k = 0; k + 1 < zt.size(); ++k) {
            double h = options.spacing * beta;
            if (from_min)
                h = std::min(h, 0.1 * (zt[k] - edges[i].z_lo));
            const int pieces = std::max(1, static_cast<int>(std::ceil((zt[k + 1] - zt[k]) / h)));
            for (int j = 1; j <= pieces; ++j)
                grid[i].push_back(j == pieces ? zt[k + 1] : zt[k] + (zt[k + 1] - zt[k]) * j / pieces);
        }
    }

    // unknowns: vertices, then grid nodes edge by edge, then the multiplier
    std::vector<int> offset(edges.size());
    int n = nv;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        offset[i] = n;
        n += static_cast<int>(grid[i].size());
    }
    const int lambda = n++;

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    std::vector<double> weight(static_cast<std::size_t>(n), 0.0);
    std::map<int, std::vector<std::tuple<int, double, double>>> saddle_faces;  // vertex -> (node, b, dz)

    auto couple = [&](int a, int b, double c) {
        trip.emplace_back(a, a, c);
        trip.emplace_back(a, b, -c);
        trip.emplace_back(b, b, c);
        trip.emplace_back(b, a, -c);
    };

    // f_bar from the same control-volume quadrature as the right-hand side
    std::vector<std::vector<double>> cv_mass(edges.size()), cv_fmass(edges.size());
    double total = 0.0, total_f = 0.0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const GraphEdge& e = edges[i];
        const EdgeCoefficients& ec = coeffs(table, e.id);
        const auto& z = grid[i];
        const std::size_t m = z.size();
        for (std::size_t k = 0; k < m; ++k) {
            const double a = k == 0 ? e.z_lo : 0.5 * (z[k - 1] + z[k]);
            const double b = k + 1 == m ? e.z_hi : 0.5 * (z[k] + z[k + 1]);
            const double w = mu.weighted_integral(e.id, a, b, [](double) { return 1.0; });
            const double wf = mu.weighted_integral(e.id, a, b, [&](double s) { return ec.f_hat_at(s); });
            cv_mass[i].push_back(w);
            cv_fmass[i].push_back(wf);
            total += w;
            total_f += wf;
        }
    }
    const double f_bar = total_f / total;

    for (std::size_t i = 0; i < edges.size(); ++i) {
        const GraphEdge& e = edges[i];
        const EdgeCoefficients& ec = coeffs(table, e.id);
        const auto& z = grid[i];
        const int m = static_cast<int>(z.size());
        auto a_inv = [&](double s) { return 1.0 / (beta * std::exp(-(s - zr) / beta) * ec.M_at(s)); };
        for (int k = 0; k + 1 < m; ++k) {
            const double r = Gauss::integrate(a_inv, z[static_cast<std::size_t>(k)], z[static_cast<std::size_t>(k + 1)]);
            couple(offset[i] + k, offset[i] + k + 1, 1.0 / r);
        }
        for (int k = 0; k < m; ++k) {
            const int row = offset[i] + k;
            rhs(row) = cv_fmass[i][static_cast<std::size_t>(k)] - f_bar * cv_mass[i][static_cast<std::size_t>(k)];
            weight[static_cast<std::size_t>(row)] = cv_mass[i][static_cast<std::size_t>(k)];
        }
        // end faces
        for (const bool lower : {true, false}) {
            const int v = lower ? e.lower : e.upper;
            const int node = lower ? offset[i] : offset[i] + m - 1;
            const double zv = vertices[static_cast<std::size_t>(v)].z;
            const double dz = std::abs(z[lower ? 0 : static_cast<std::size_t>(m - 1)] - zv);
            if (is_saddle(topology, v)) {
                const double b = gluing_at(table, v).b.at(e.id);
                const double c = std::exp(-(zv - zr) / beta) * 0.5 * b / dz;
                couple(v, node, c);
                saddle_faces[v].emplace_back(node, b, lower ? dz : -dz);  // z_node - z_v
            } else {
                // reflecting end: the vertex value follows its neighbour
                trip.emplace_back(v, v, 1.0);
                trip.emplace_back(v, node, -1.0);
            }
        }
    }
    for (int row = 0; row < lambda; ++row) {
        if (weight[static_cast<std::size_t>(row)] != 0.0) {
            trip.emplace_back(row, lambda, weight[static_cast<std::size_t>(row)]);
            trip.emplace_back(lambda, row, weight[static_cast<std::size_t>(row)]);
        }
    }

    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw NumericalError("graph Poisson system is singular: " + lu.lastErrorMessage());
    const Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite())
        throw NumericalError("graph Poisson solve failed");
    const double res = (A * x - rhs).norm() / std::max(rhs.norm(), 1e-300);
    if (res > 1e-8) {
        std::ostringstream msg;
        msg << "graph Poisson residual " << res << " too large (ill-conditioned system)";
        throw NumericalError(msg.str());
    }

    GraphPoissonSolution sol;
    sol.f_bar = f_bar;
    sol.normalization = total;
    for (int v = 0; v < nv; ++v)
        sol.vertex_phi[v] = x(v);
    double s2 = 0.0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const GraphEdge& e = edges[i];
        const auto& z = grid[i];
        EdgeSolution es;
        es.edge_id = e.id;
        es.z.push_back(e.z_lo);
        es.phi.push_back(x(e.lower));
        for (std::size_t k = 0; k < z.size(); ++k) {
            const int row = offset[i] + static_cast<int>(k);
            es.z.push_back(z[k]);
            es.phi.push_back(x(row));
            s2 += x(row) * rhs(row);
        }
        es.z.push_back(e.z_hi);
        es.phi.push_back(x(e.upper));
        sol.edges.push_back(std::move(es));
    }
    sol.sigma2 = 2.0 * s2 / total;

    // + for edges along which U increases toward the saddle
    for (const auto& [v, faces] : saddle_faces) {
        double sum = 0.0, largest = 0.0;
        for (const auto& [node, b, dz] : faces) {
            const double d = (x(node) - x(v)) / dz;  // dPhi/dz along the edge at the vertex
            const double term = (dz < 0.0 ? 1.0 : -1.0) * b * d;
            sum += term;
            largest = std::max(largest, std::abs(term));
        }
        if (largest > 0.0)
            sol.gluing_residual = std::max(sol.gluing_residual, std::abs(sum) / largest);
    }
    return sol;
}

GraphLimit limiting_variance(const CoefficientTable& table, const GraphTopology& topology,
                             const PoissonOptions& options)
{
    GraphLimit out;
    out.solution = solve_graph_poisson(table, topology, options);
    for (const auto& gw : table.gluing)
        out.gluing_flagged = out.gluing_flagged || gw.flagged;
    auto& est = out.estimate;
    est.value = out.solution.sigma2;
    est.kind = VarianceKind::asymptotic_sigma2;
    est.method = VarianceMethod::graph_limit;
    est.t_horizon = std::numeric_limits<double>::infinity();
    est.delta = std::numeric_limits<double>::infinity();
    est.flagged = out.gluing_flagged;
    std::ostringstream msg;
    msg << "f_bar=" << out.solution.f_bar << " gluing_residual=" << out.solution.gluing_residual;
    if (out.gluing_flagged)
        msg << " gluing extrapolation flagged";
    est.diagnostic = msg.str();
    return out;
}

GraphLimit limiting_variance(const Scenario& scenario, const Observable& f, double beta, int grid_n, double z_max,
                             int workers)
{
    const GraphTopology g = build_graph(scenario, z_max);
    const CoefficientTable t = tabulate_edge_coefficients(g, f, beta, grid_n, {}, workers);
    return limiting_variance(t, g);
}

void GraphSimOptions::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ValidationError("dt must be positive");
    if (!(t_final >= 0.0) || !std::isfinite(t_final))
        throw ValidationError("t_final must be non-negative");
    if (!(vertex_offset > 0.0))
        throw ValidationError("vertex_offset must be positive");
    if (thin < 1)
        throw ValidationError("thin must be at least 1");
}

namespace {

// Shared stepping rule for all graph simulations.
class GraphWalker {
public:
    GraphWalker(const CoefficientTable& table, const GraphTopology& topology, const GraphSimOptions& options)
        : table_(table), topo_(topology), opt_(options), rng_(options.seed, 3), branch_rng_(options.seed, 4)
    {
        opt_.validate();
        for (const auto& e : topology.edges()) {
            if (2.0 * opt_.vertex_offset >= e.length())
                throw ValidationError("vertex_offset too large for edge " + GraphTopology::edge_label(e.id));
            // step-size rule from the largest tabulated coefficients
            const auto& ec = coeffs(table, e.id);
            double worst = 0.0;
            for (std::size_t k = 0; k < ec.z_grid.size(); ++k)
                worst = std::max(worst, std::abs(ec.drift[k]) * opt_.dt +
                                            3.0 * std::sqrt(std::max(ec.diffusion_var[k], 0.0) * opt_.dt));
            if (worst >= e.length()) {
                std::ostringstream msg;
                msg << "dt=" << opt_.dt << " too large for edge " << GraphTopology::edge_label(e.id);
                throw ValidationError(msg.str());
            }
        }
    }

    /// Moves an arbitrary start into the admissible band of its edge.
    GraphPoint admit(GraphPoint p, double t, std::vector<VertexEvent>* events)
    {
        const GraphEdge& e = topo_.edge(p.edge_id);
        if (!std::isfinite(p.z) || p.z < e.z_lo || p.z > e.z_hi)
            throw ValidationError("start point outside its edge");
        return settle(p, t, events);
    }

    GraphPoint step(GraphPoint p, std::uint64_t k, double t, std::vector<VertexEvent>* events, double* f_hat)
    {
        const auto& ec = coeffs(table_, p.edge_id);
        const auto c = ec.local(p.z);
        if (f_hat)
            *f_hat = c.f_hat;
        const double xi = rng_.normal_pair(k >> 1)[k & 1];
        p.z += c.drift * opt_.dt + std::sqrt(std::max(c.diffusion_var, 0.0) * opt_.dt) * xi;
        return settle(p, t, events);
    }

    double f_hat(GraphPoint p) const { return coeffs(table_, p.edge_id).local(p.z).f_hat; }

private:
    GraphPoint settle(GraphPoint p, double t, std::vector<VertexEvent>* events)
    {
        const double rho = opt_.vertex_offset;
        for (;;) {
            const GraphEdge& e = topo_.edge(p.edge_id);
            const double lo = e.z_lo + rho, hi = e.z_hi - rho;
            if (p.z >= lo && p.z <= hi)
                return p;
            const bool below = p.z < lo;
            const int v = below ? e.lower : e.upper;
            if (!is_saddle(topo_, v)) {
                p.z = below ? 2.0 * lo - p.z : 2.0 * hi - p.z;
                p.z = std::clamp(p.z, lo, hi);
                return p;
            }
            const GluingWeights& gw = gluing_at(table_, v);
            double total = 0.0;
            for (const auto& [eid, b] : gw.b)
                total += b;
            const double u = CounterRng::to_open_unit(branch_rng_.bits(n_branch_++)[0]) * total;
            int chosen = gw.b.rbegin()->first;
            double acc = 0.0;
            for (const auto& [eid, b] : gw.b) {
                acc += b;
                if (u < acc) {
                    chosen = eid;
                    break;
                }
            }
            const GraphEdge& ne = topo_.edge(chosen);
            const double zv = topo_.vertex(v).z;
            p = {ne.lower == v ? zv + rho : zv - rho, chosen};
            if (events)
                events->push_back({t, v, chosen});
            return p;
        }
    }

    const CoefficientTable& table_;
    const GraphTopology& topo_;
    GraphSimOptions opt_;
    CounterRng rng_;
    CounterRng branch_rng_;
    std::uint64_t n_branch_ = 0;
};

std::int64_t step_count(const GraphSimOptions& o)
{
    return static_cast<std::int64_t>(std::llround(o.t_final / o.dt));
}

}  // namespace

GraphPath simulate_graph(const CoefficientTable& table, const GraphTopology& topology, GraphPoint y0,
                         const GraphSimOptions& options)
{
    GraphWalker walker(table, topology, options);
    GraphPath path;
    path.seed = options.seed;
    path.times.push_back(0.0);
    path.points.push_back(y0);
    const std::int64_t n = step_count(options);
    if (n == 0)
        return path;
    GraphPoint p = walker.admit(y0, 0.0, &path.vertex_events);
    for (std::int64_t k = 0; k < n; ++k) {
        const double t = (k + 1) * options.dt;
        p = walker.step(p, static_cast<std::uint64_t>(k), t, &path.vertex_events, nullptr);
        if ((k + 1) % options.thin == 0 || k + 1 == n) {
            path.times.push_back(t);
            path.points.push_back(p);
        }
    }
    return path;
}

ObservablePath simulate_graph_observable(const CoefficientTable& table, const GraphTopology& topology, GraphPoint y0,
                                         const GraphSimOptions& options, double burn_in, std::int64_t block_steps)
{
    if (block_steps < 1)
        throw ValidationError("block_steps must be at least 1");
    if (!(burn_in >= 0.0))
        throw ValidationError("burn_in must be non-negative");
    GraphWalker walker(table, topology, options);
    const std::int64_t n_burn = static_cast<std::int64_t>(std::llround(burn_in / options.dt));
    const std::int64_t n = step_count(options);
    GraphPoint p = walker.admit(y0, 0.0, nullptr);
    ObservablePath out;
    out.dt_effective = options.dt;
    out.seed = options.seed;
    out.block_time = static_cast<double>(block_steps) * options.dt;
    double acc = 0.0;
    std::int64_t in_block = 0;
    for (std::int64_t k = 0; k < n_burn + n; ++k) {
        double f = 0.0;
        p = walker.step(p, static_cast<std::uint64_t>(k), (k + 1) * options.dt, nullptr, &f);
        if (k < n_burn)
            continue;
        acc += f;  // left point value of the step just taken
        if (++in_block == block_steps) {
            out.block_means.push_back(acc / static_cast<double>(block_steps));
            acc = 0.0;
            in_block = 0;
        }
    }
    return out;
}

std::vector<GraphPoint> graph_endpoints(const CoefficientTable& table, const GraphTopology& topology, GraphPoint y0,
                                        const GraphSimOptions& options, int n_replicas, int workers)
{
    if (n_replicas < 1)
        throw ValidationError("n_replicas must be at least 1");
    options.validate();
    std::vector<GraphPoint> out(static_cast<std::size_t>(n_replicas));
    const std::int64_t n = step_count(options);
    parallel_for(out.size(), workers, [&](std::size_t r) {
        GraphSimOptions o = options;
        o.seed = derive_stream_seed(options.seed, r);
        GraphWalker walker(table, topology, o);
        GraphPoint p = n == 0 ? y0 : walker.admit(y0, 0.0, nullptr);
        for (std::int64_t k = 0; k < n; ++k)
            p = walker.step(p, static_cast<std::uint64_t>(k), (k + 1) * o.dt, nullptr, nullptr);
        out[r] = p;
    });
    return out;
}

double edge_resolved_key(const GraphTopology& topology, GraphPoint p)
{
    const double span = topology.z_max() - topology.z_min() + 1.0;
    return 2.0 * span * p.edge_id + (p.z - topology.z_min());
}

}  // namespace irrlab
