#include "irrlab/variance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "irrlab/parallel.hpp"
#include "irrlab/rng.hpp"

namespace irrlab {

std::string to_string(VarianceKind kind)
{
    return kind == VarianceKind::var_of_time_average ? "var_of_time_average" : "asymptotic_sigma2";
}

std::string to_string(VarianceMethod method)
{
    switch (method) {
    case VarianceMethod::batch_means: return "batch_means";
    case VarianceMethod::replica_spread: return "replica_spread";
    case VarianceMethod::poisson_oracle: return "poisson_oracle";
    case VarianceMethod::graph_limit: return "graph_limit";
    }
    return "?";
}

double ergodic_average(const Trajectory& trajectory, const Observable& f)
{
    const std::size_t n = trajectory.size();
    if (n == 0)
        throw ValidationError("ergodic_average: empty trajectory");
    const double f0 = f(trajectory.states[0]);
    if (n == 1)
        return f0;
    // left Riemann sum over n - 1 equal intervals; shifted by f0 so constants are exact
    double s = 0.0;
    for (std::size_t k = 1; k + 1 < n; ++k)
        s += f(trajectory.states[k]) - f0;
    return f0 + s / static_cast<double>(n - 1);
}

int default_batch_count(std::size_t n_samples)
{
    return static_cast<int>(std::min<std::size_t>(50, static_cast<std::size_t>(std::sqrt(static_cast<double>(n_samples)))));
}

BatchMeans batch_means_variance(std::span<const double> values, double sample_dt, int n_batches)
{
    const std::size_t n = values.size();
    const int b = n_batches == 0 ? default_batch_count(n) : n_batches;
    if (b < 2)
        throw ValidationError("batch means needs n_batches >= 2");
    if (n < 2 * static_cast<std::size_t>(b)) {
        std::ostringstream msg;
        msg << "trajectory too short for batch means: need at least " << 2 * b << " samples, have " << n;
        throw ValidationError(msg.str());
    }
    const std::size_t m = n / static_cast<std::size_t>(b);
    const std::size_t skip = n - m * static_cast<std::size_t>(b);
    std::vector<double> means(static_cast<std::size_t>(b));
    for (std::size_t i = 0; i < means.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            s += values[skip + i * m + k];
        means[i] = s / static_cast<double>(m);
    }
    const double s2 = stats::sample_variance(means);
    const double dof = b - 1.0;
    const double t_horizon = static_cast<double>(m * static_cast<std::size_t>(b)) * sample_dt;

    BatchMeans out;
    out.mean = stats::mean(means);
    out.mean_ci = stats::student_t_quantile(0.975, dof) * std::sqrt(s2 / b);

    VarianceEstimate& v = out.time_average;
    v.kind = VarianceKind::var_of_time_average;
    v.method = VarianceMethod::batch_means;
    v.value = s2 / b;
    v.n_batches = b;
    v.t_horizon = t_horizon;
    const double lo = dof * v.value / stats::chi_squared_quantile(0.975, dof);
    const double hi = dof * v.value / stats::chi_squared_quantile(0.025, dof);
    v.ci_halfwidth = 0.5 * (hi - lo);

    out.sigma2 = v;
    out.sigma2.kind = VarianceKind::asymptotic_sigma2;
    out.sigma2.value = v.value * t_horizon;
    out.sigma2.ci_halfwidth = v.ci_halfwidth * t_horizon;
    return out;
}

BatchMeans batch_means_variance(const Trajectory& trajectory, const Observable& f, int n_batches, double burn_in)
{
    if (trajectory.size() < 2)
        throw ValidationError("batch means needs a trajectory with at least two states");
    const double h = trajectory.thin * trajectory.dt_effective;
    const auto first = static_cast<std::size_t>(std::llround(burn_in / h));
    if (first + 1 >= trajectory.size())
        throw ValidationError("burn_in leaves no samples");
    std::vector<double> values;
    values.reserve(trajectory.size() - first - 1);
    for (std::size_t k = first; k + 1 < trajectory.size(); ++k)
        values.push_back(f(trajectory.states[k]));
    auto out = batch_means_variance(values, h, n_batches);
    for (auto* v : {&out.time_average, &out.sigma2}) {
        v->delta = trajectory.delta;
        v->dt = trajectory.dt_effective;
        v->seed = trajectory.seed;
    }
    return out;
}

SweepTable delta_sweep(const Scenario& scenario, const Observable& f, double beta, std::vector<double> deltas,
                       std::vector<double> horizons, int n_replicas, std::uint64_t seed, const SweepOptions& options)
{
    if (deltas.empty())
        throw ValidationError("delta_sweep: deltas must be non-empty");
    if (!std::is_sorted(deltas.begin(), deltas.end()))
        throw ValidationError("delta_sweep: deltas must be sorted ascending");
    if (horizons.empty())
        throw ValidationError("delta_sweep: horizons must be non-empty");
    for (double t : horizons)
        if (!(t > 0.0))
            throw ValidationError("delta_sweep: horizons must be > 0");
    if (n_replicas < 1)
        throw ValidationError("delta_sweep: n_replicas must be >= 1");
    const double t_max = *std::max_element(horizons.begin(), horizons.end());

    const std::size_t nd = deltas.size();
    const auto nr = static_cast<std::size_t>(n_replicas);
    std::vector<ObservablePath> paths(nd * nr);
    parallel_for(paths.size(), options.workers, [&](std::size_t idx) {
        const std::size_t di = idx / nr;
        const std::size_t r = idx % nr;
        SimConfig c(GibbsSpec{scenario, beta}, DriftField{scenario, AntisymmetricMatrix(options.s), deltas[di]});
        c.x0 = options.x0;
        c.dt_base = options.dt_base;
        c.integrator = options.integrator;
        c.seed = derive_stream_seed(seed, r);
        c.t_final = options.burn_in + t_max;
        paths[idx] = simulate_observable(c, f, options.burn_in, options.block_steps);
    });

    SweepTable table;
    table.seed = seed;
    for (std::size_t di = 0; di < nd; ++di) {
        for (double t : horizons) {
            SweepCell cell;
            cell.delta = deltas[di];
            cell.t = t;
            std::vector<double> vals;
            std::vector<double> cis;
            for (std::size_t r = 0; r < nr; ++r) {
                const auto& p = paths[di * nr + r];
                const auto nblk = std::min(p.block_means.size(),
                                           static_cast<std::size_t>(std::llround(t / p.block_time)));
                auto bm = batch_means_variance(std::span<const double>(p.block_means.data(), nblk), p.block_time,
                                               options.n_batches);
                for (auto* v : {&bm.time_average, &bm.sigma2}) {
                    v->delta = deltas[di];
                    v->dt = p.dt_effective;
                    v->seed = p.seed;
                }
                vals.push_back(bm.time_average.value);
                cis.push_back(bm.time_average.ci_halfwidth);
                cell.seeds.push_back(p.seed);
                cell.replicas.push_back(std::move(bm));
            }
            cell.median = cell.replicas.front().time_average;
            cell.median.value = stats::median(vals);
            cell.median.ci_halfwidth = stats::median(cis);
            cell.median.seed = seed;
            table.cells.push_back(std::move(cell));
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// 2-D Poisson oracle

namespace {

struct OracleSolve {
    double sigma2 = 0.0;
    double residual = 0.0;
};

OracleSolve solve_oracle(const GibbsSpec& gibbs, const DriftField& drift, const Observable& f, const Box& box, int n)
{
    const double beta = gibbs.beta;
    const double hx = box.width() / n;
    const double hy = box.height() / n;
    const auto& sc = gibbs.scenario;
    const auto idx = [n](int i, int j) { return i * n + j; };
    const int N = n * n;

    std::vector<double> u(static_cast<std::size_t>(N));
    std::vector<double> fv(static_cast<std::size_t>(N));
    double umin = INFINITY;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec2 c{box.xmin + (i + 0.5) * hx, box.ymin + (j + 0.5) * hy};
            u[static_cast<std::size_t>(idx(i, j))] = sc.u(c);
            fv[static_cast<std::size_t>(idx(i, j))] = f(c);
            umin = std::min(umin, sc.u(c));
        }
    std::vector<double> p(static_cast<std::size_t>(N));
    double z = 0.0;
    for (int k = 0; k < N; ++k) {
        p[static_cast<std::size_t>(k)] = std::exp(-(u[static_cast<std::size_t>(k)] - umin) / beta);
        z += p[static_cast<std::size_t>(k)];
    }
    for (double& v : p)
        v /= z;
    const double density_norm = z * hx * hy;

    // stream function at cell corners, zero on the boundary
    std::vector<double> psi(static_cast<std::size_t>((n + 1) * (n + 1)), 0.0);
    const auto cidx = [n](int i, int j) { return static_cast<std::size_t>(i * (n + 1) + j); };
    const double s = drift.s_matrix.s();
    for (int i = 1; i < n; ++i)
        for (int j = 1; j < n; ++j) {
            const Vec2 c{box.xmin + i * hx, box.ymin + j * hy};
            psi[cidx(i, j)] = -beta * s * std::exp(-(sc.u(c) - umin) / beta) / density_norm;
        }

    double fbar = 0.0;
    for (int k = 0; k < N; ++k)
        fbar += p[static_cast<std::size_t>(k)] * fv[static_cast<std::size_t>(k)];
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 1);
    for (int k = 0; k < N; ++k)
        rhs(k) = fv[static_cast<std::size_t>(k)] - fbar;

    // rows hold -L: diagonal sum of reversible rates, off-diagonals -(rate + transport)
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N) * 6 + 2 * static_cast<std::size_t>(N));
    const double delta = drift.delta;
    auto couple = [&](int a, int b, double h2, double flux_ab) {
        const auto ua = u[static_cast<std::size_t>(a)];
        const auto ub = u[static_cast<std::size_t>(b)];
        const double r_ab = beta / h2 * std::exp(-(ub - ua) / (2.0 * beta));
        const double r_ba = beta / h2 * std::exp(-(ua - ub) / (2.0 * beta));
        const double t_ab = delta * flux_ab / (2.0 * p[static_cast<std::size_t>(a)]);
        const double t_ba = -delta * flux_ab / (2.0 * p[static_cast<std::size_t>(b)]);
        trip.emplace_back(a, a, r_ab);
        trip.emplace_back(a, b, -r_ab - t_ab);
        trip.emplace_back(b, b, r_ba);
        trip.emplace_back(b, a, -r_ba - t_ba);
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i + 1 < n)
                couple(idx(i, j), idx(i + 1, j), hx * hx, psi[cidx(i + 1, j + 1)] - psi[cidx(i + 1, j)]);
            if (j + 1 < n)
                couple(idx(i, j), idx(i, j + 1), hy * hy, -(psi[cidx(i + 1, j + 1)] - psi[cidx(i, j + 1)]));
        }
    for (int k = 0; k < N; ++k) {
        trip.emplace_back(k, N, p[static_cast<std::size_t>(k)]);
        trip.emplace_back(N, k, p[static_cast<std::size_t>(k)]);
    }
    Eigen::SparseMatrix<double> a(N + 1, N + 1);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success)
        throw NumericalError("poisson oracle: factorization failed: " + lu.lastErrorMessage());
    const Eigen::VectorXd x = lu.solve(rhs);
    OracleSolve out;
    const double rn = rhs.norm();
    out.residual = rn > 0.0 ? (a * x - rhs).norm() / rn : (a * x - rhs).norm();
    if (lu.info() != Eigen::Success || !(out.residual < 1e-8)) {
        std::ostringstream msg;
        msg << "poisson oracle: linear solve did not converge (relative residual " << out.residual << ")";
        throw NumericalError(msg.str());
    }
    double s2 = 0.0;
    for (int k = 0; k < N; ++k)
        s2 += p[static_cast<std::size_t>(k)] * x(k) * rhs(k);
    out.sigma2 = std::max(0.0, 2.0 * s2);
    return out;
}

}  // namespace

VarianceEstimate poisson_oracle_2d(const GibbsSpec& gibbs, const DriftField& drift, const Observable& f,
                                   const PoissonOracleOptions& options)
{
    gibbs.validate();
    drift.validate();
    if (options.grid_n < 128)
        throw ValidationError("poisson oracle: grid_n must be >= 128");
    const Box& box = options.box;
    const Box outer{2.0 * box.xmin - 0.5 * (box.xmin + box.xmax), 2.0 * box.xmax - 0.5 * (box.xmin + box.xmax),
                    2.0 * box.ymin - 0.5 * (box.ymin + box.ymax), 2.0 * box.ymax - 0.5 * (box.ymin + box.ymax)};
    const double tail = gibbs_tail_mass(gibbs, box, {outer, 512});
    if (tail > 1e-10) {
        std::ostringstream msg;
        msg << "poisson oracle: box leaves Gibbs tail mass " << tail << " > 1e-10";
        throw ValidationError(msg.str());
    }
    const auto fine = solve_oracle(gibbs, drift, f, box, options.grid_n);
    VarianceEstimate v;
    v.value = fine.sigma2;
    v.kind = VarianceKind::asymptotic_sigma2;
    v.method = VarianceMethod::poisson_oracle;
    v.delta = drift.delta;
    v.n_batches = 0;
    std::ostringstream diag;
    diag << "grid " << options.grid_n << ", residual " << fine.residual;
    if (options.richardson_check) {
        const auto coarse = solve_oracle(gibbs, drift, f, box, options.grid_n / 2);
        const double scale = std::max(std::abs(fine.sigma2), 1e-300);
        const double rel = std::abs(fine.sigma2 - coarse.sigma2) / scale;
        // Richardson error estimate for a second-order scheme is rel/3; flag on rel itself
        v.ci_halfwidth = std::abs(fine.sigma2 - coarse.sigma2) / 3.0;
        diag << ", coarse " << coarse.sigma2 << ", rel diff " << rel;
        if (fine.sigma2 > 1e-14 && rel > 0.05) {
            v.flagged = true;
            diag << " (grid too coarse)";
        }
    }
    v.diagnostic = diag.str();
    return v;
}

// ---------------------------------------------------------------------------

int CellPartition::cell(Vec2 p) const
{
    const auto ix = std::upper_bound(x_edges.begin(), x_edges.end(), p.x) - x_edges.begin();
    const auto iy = std::upper_bound(y_edges.begin(), y_edges.end(), p.y) - y_edges.begin();
    return static_cast<int>(ix * static_cast<std::ptrdiff_t>(y_edges.size() + 1) + iy);
}

CellPartition quantile_partition(std::span<const Vec2> reference, int nx, int ny)
{
    if (reference.empty() || nx < 1 || ny < 1)
        throw ValidationError("quantile_partition: empty reference or bad bin counts");
    std::vector<double> xs;
    std::vector<double> ys;
    for (const Vec2 p : reference) {
        xs.push_back(p.x);
        ys.push_back(p.y);
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    CellPartition part;
    for (int k = 1; k < nx; ++k)
        part.x_edges.push_back(xs[xs.size() * static_cast<std::size_t>(k) / static_cast<std::size_t>(nx)]);
    for (int k = 1; k < ny; ++k)
        part.y_edges.push_back(ys[ys.size() * static_cast<std::size_t>(k) / static_cast<std::size_t>(ny)]);
    return part;
}

InvarianceTest gibbs_invariance_test(const std::vector<std::vector<Vec2>>& paths, std::span<const Vec2> reference,
                                     int batches_per_path, int nx, int ny)
{
    if (paths.empty() || batches_per_path < 1)
        throw ValidationError("gibbs_invariance_test: need at least one path and one batch");
    InvarianceTest out;
    out.partition = quantile_partition(reference, nx, ny);
    const int nc = out.partition.n_cells();
    std::vector<double> ref_counts(static_cast<std::size_t>(nc), 0.0);
    for (const Vec2 p : reference)
        ref_counts[static_cast<std::size_t>(out.partition.cell(p))] += 1.0;
    out.n_reference = reference.size();

    std::vector<std::vector<double>> rows;
    for (const auto& path : paths) {
        const std::size_t m = path.size() / static_cast<std::size_t>(batches_per_path);
        if (m == 0)
            throw ValidationError("gibbs_invariance_test: path shorter than batch count");
        for (int bi = 0; bi < batches_per_path; ++bi) {
            std::vector<double> row(static_cast<std::size_t>(nc), 0.0);
            for (std::size_t k = 0; k < m; ++k)
                row[static_cast<std::size_t>(out.partition.cell(path[static_cast<std::size_t>(bi) * m + k]))] += 1.0;
            for (double& v : row)
                v /= static_cast<double>(m);
            rows.push_back(std::move(row));
        }
        out.n_sde += m * static_cast<std::size_t>(batches_per_path);
    }
    out.wald = stats::wald_cell_test(rows, ref_counts);
    return out;
}

}  // namespace irrlab
