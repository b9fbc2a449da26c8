#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "irrlab/graph_diffusion.hpp"
#include "irrlab/rng.hpp"
#include "irrlab/variance.hpp"

using namespace irrlab;

namespace {

struct Fixture {
    GraphTopology graph;
    CoefficientTable table;
};

const Fixture& bowl()
{
    static const Fixture f = [] {
        auto g = build_graph(make_bowl());
        auto t = tabulate_edge_coefficients(g, g.scenario().observable("f2"), 0.1, 64);
        return Fixture{std::move(g), std::move(t)};
    }();
    return f;
}

const Fixture& double_well(double z_max = 4.0)
{
    static std::map<double, Fixture> cache;
    auto it = cache.find(z_max);
    if (it == cache.end()) {
        auto g = build_graph(make_double_well(), z_max);
        auto t = tabulate_edge_coefficients(g, g.scenario().observable("f2"), 0.1, 64);
        it = cache.emplace(z_max, Fixture{std::move(g), std::move(t)}).first;
    }
    return it->second;
}

// Trapezoid on a smoothstep-mapped grid; the mapping has zero slope at both
// ends, which tames the log singularity of T at saddles.
template <class G>
double mapped_trapezoid(G g, double a, double b, int n = 40000)
{
    double sum = 0.0;
    for (int i = 1; i < n; ++i) {
        const double u = static_cast<double>(i) / n;
        const double s = u * u * (3.0 - 2.0 * u);
        const double ds = 6.0 * u * (1.0 - u);
        sum += g(a + (b - a) * s) * (b - a) * ds;
    }
    return sum / n;
}

// sigma^2 = (2/Z) sum over edges of integral F^2 / (beta e^{-z/beta} M), where
// F is the flux fed by the leaves: F(z) = -integral from the minimum of
// T e^{-z/beta} (f_hat - f_bar) on lobes, the integral up to the cap on the top edge.
double flux_oracle(const Fixture& fx)
{
    const double beta = fx.table.beta;
    const double zr = fx.graph.z_min();
    auto w0 = [&](const EdgeCoefficients& ec, double z) { return ec.T_at(z) * std::exp(-(z - zr) / beta); };
    double Z = 0.0, Zf = 0.0;
    for (const auto& ec : fx.table.edges) {
        Z += mapped_trapezoid([&](double z) { return w0(ec, z); }, ec.z_lo, ec.z_hi);
        Zf += mapped_trapezoid([&](double z) { return w0(ec, z) * ec.f_hat_at(z); }, ec.z_lo, ec.z_hi);
    }
    const double f_bar = Zf / Z;
    double energy = 0.0;
    for (const auto& ec : fx.table.edges) {
        const auto& e = fx.graph.edge(ec.edge_id);
        const bool top = fx.graph.vertex(e.upper).kind == VertexKind::truncation_cap;
        auto source = [&](double z) { return w0(ec, z) * (ec.f_hat_at(z) - f_bar); };
        // cumulative flux on a fine grid, then energy by the mapped rule
        const int n = 20000;
        std::vector<double> zs(n + 1), fl(n + 1, 0.0);
        for (int i = 0; i <= n; ++i) {
            const double u = static_cast<double>(i) / n;
            zs[static_cast<std::size_t>(i)] = e.z_lo + e.length() * u * u * (3.0 - 2.0 * u);
        }
        auto seg = [&](int i) {
            const double a = zs[static_cast<std::size_t>(i)], b = zs[static_cast<std::size_t>(i + 1)];
            const double m = 0.5 * (a + b);
            return (b - a) * (source(a + 1e-12 * (a == e.z_lo)) + 4.0 * source(m) +
                              source(b - 1e-12 * (b == e.z_hi))) / 6.0;
        };
        if (!top) {
            for (int i = 0; i < n; ++i)
                fl[static_cast<std::size_t>(i + 1)] = fl[static_cast<std::size_t>(i)] - seg(i);
        } else {
            for (int i = n - 1; i >= 0; --i)
                fl[static_cast<std::size_t>(i)] = fl[static_cast<std::size_t>(i + 1)] + seg(i);
        }
        for (int i = 0; i < n; ++i) {
            const double a = zs[static_cast<std::size_t>(i)], b = zs[static_cast<std::size_t>(i + 1)];
            const double m = 0.5 * (a + b);
            const double F = 0.5 * (fl[static_cast<std::size_t>(i)] + fl[static_cast<std::size_t>(i + 1)]);
            energy += (b - a) * F * F / (beta * std::exp(-(m - zr) / beta) * ec.M_at(m));
        }
    }
    return 2.0 * energy / Z;
}

}  // namespace

TEST_SUITE("graph_diffusion")
{
    TEST_CASE("graded integration of log singularities")
    {
        auto lg = [](double z) { return std::log(1.0 / z); };
        CHECK(graded_integral(lg, 0.0, 1.0, true, false, 0.1) == doctest::Approx(1.0).epsilon(1e-9));
        auto lg2 = [](double z) { return std::log(1.0 / (2.0 - z)) + std::log(1.0 / z); };
        CHECK(graded_integral(lg2, 0.0, 2.0, true, true, 0.3) ==
              doctest::Approx(2.0 * (2.0 - 2.0 * std::log(2.0))).epsilon(1e-8));
        CHECK(graded_integral(lg, 1.0, 1.0, false, false, 0.1) == 0.0);
    }

    TEST_CASE("projected Gibbs measure")
    {
        const auto& b = bowl();
        const GraphMeasure mu(b.table, b.graph);
        CHECK(mu.edge_mass()[0] == doctest::Approx(1.0));
        for (double z : {0.01, 0.1, 0.5, 1.5})
            CHECK(mu.density(0, z) == doctest::Approx(std::exp(-z / 0.1) / 0.1).epsilon(1e-6));
        CHECK(mu.f_bar() == doctest::Approx(0.2).epsilon(1e-8));

        const auto& d = double_well();
        const GraphMeasure mw(d.table, d.graph);
        double total = 0.0;
        for (double m : mw.edge_mass()) {
            CHECK(m > 0.0);
            total += m;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(mw.edge_mass()[0] == doctest::Approx(mw.edge_mass()[1]).epsilon(1e-6));
        // graph average of f_hat against 2-D quadrature of the Gibbs measure
        const GibbsSpec spec{d.graph.scenario(), 0.1};
        const double pi_f = gibbs_expectation(spec, d.graph.scenario().observable("f2"));
        CHECK(std::abs(mw.f_bar() - pi_f) < 1e-6);
    }

    TEST_CASE("bowl Poisson solution is linear")
    {
        const auto& b = bowl();
        const auto sol = solve_graph_poisson(b.table, b.graph);
        CHECK(sol.f_bar == doctest::Approx(0.2).epsilon(1e-10));
        CHECK(sol.sigma2 == doctest::Approx(0.04).epsilon(1e-3));
        // mu-weighted RMS of Phi - z about its mean
        const auto& es = sol.edges[0];
        double w = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t k = 1; k + 1 < es.z.size(); ++k) {
            const double dz = 0.5 * (es.z[k + 1] - es.z[k - 1]);
            const double p = std::exp(-es.z[k] / 0.1) * dz;
            const double r = es.phi[k] - es.z[k];
            w += p;
            m1 += p * r;
            m2 += p * r * r;
        }
        const double rms = std::sqrt(std::max(0.0, m2 / w - (m1 / w) * (m1 / w)));
        CHECK(rms < 1e-4);
        // normalization: integral Phi d(mu) = 0, hence mean of Phi - z is -f_bar
        CHECK(m1 / w == doctest::Approx(-0.1).epsilon(1e-3));
        CHECK(sol.phi_at(0, 0.3) - sol.phi_at(0, 0.1) == doctest::Approx(0.2).epsilon(1e-3));
    }

    TEST_CASE("constant observable has zero limit")
    {
        const auto& b = bowl();
        const auto t = tabulate_edge_coefficients(b.graph, make_constant_observable(3.0), 0.1, 64);
        const auto lim = limiting_variance(t, b.graph);
        CHECK(std::abs(lim.estimate.value) < 1e-12);
        for (double p : lim.solution.edges[0].phi)
            CHECK(std::abs(p) < 1e-9);
    }

    TEST_CASE("double well solve: gluing and flux oracle")
    {
        const auto& d = double_well();
        const auto lim = limiting_variance(d.table, d.graph);
        CHECK(lim.solution.gluing_residual < 1e-6);
        CHECK_FALSE(lim.gluing_flagged);
        CHECK(lim.estimate.method == VarianceMethod::graph_limit);
        CHECK(lim.estimate.kind == VarianceKind::asymptotic_sigma2);
        CHECK(lim.estimate.value > 0.0);
        CHECK(lim.estimate.value == doctest::Approx(flux_oracle(d)).epsilon(5e-3));
        // continuity at the saddle
        const double zs = d.graph.vertex(2).z;
        for (int e : {0, 1, 2})
            CHECK(lim.solution.phi_at(e, zs + (e == 2 ? 1e-9 : -1e-9)) ==
                  doctest::Approx(lim.solution.vertex_phi.at(2)).epsilon(1e-2));
        // symmetric lobes
        CHECK(lim.solution.phi_at(0, 0.1) == doctest::Approx(lim.solution.phi_at(1, 0.1)).epsilon(1e-8));
    }

    TEST_CASE("bowl oracle through the flux form")
    {
        CHECK(flux_oracle(bowl()) == doctest::Approx(0.04).epsilon(1e-4));
    }

    TEST_CASE("cap insensitivity")
    {
        const double ref = limiting_variance(double_well(4.0).table, double_well(4.0).graph).estimate.value;
        for (double cap : {3.0, 5.0}) {
            CAPTURE(cap);
            const auto& d = double_well(cap);
            CHECK(limiting_variance(d.table, d.graph).estimate.value == doctest::Approx(ref).epsilon(1e-2));
        }
    }

    TEST_CASE("bowl walk samples the exponential law")
    {
        const auto& b = bowl();
        GraphSimOptions o;
        o.dt = 1e-3;
        o.t_final = 5000.0;
        o.thin = 5;
        o.seed = 11;
        const auto path = simulate_graph(b.table, b.graph, {0.1, 0}, o);
        REQUIRE(path.points.size() == 1000001);
        std::vector<double> z;
        for (const auto& p : path.points)
            z.push_back(p.z);
        std::sort(z.begin(), z.end());
        CHECK(z.front() >= 0.0);
        double ks = 0.0;
        const double n = static_cast<double>(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double F = 1.0 - std::exp(-z[i] / 0.1);
            ks = std::max({ks, std::abs(F - i / n), std::abs(F - (i + 1) / n)});
        }
        CHECK(ks < 0.02);
        CHECK(path.vertex_events.empty());
    }

    TEST_CASE("saddle branch frequencies follow the weights")
    {
        const auto& d = double_well();
        GraphSimOptions o;
        o.t_final = 2000.0;
        o.thin = 1000;
        o.seed = 5;
        const auto path = simulate_graph(d.table, d.graph, {0.5, 2}, o);
        const auto& b = d.table.gluing.at(0).b;
        const double p3 = b.at(2) / (b.at(0) + b.at(1) + b.at(2));
        CHECK(p3 == doctest::Approx(0.5).epsilon(1e-3));
        REQUIRE(path.vertex_events.size() > 1000);
        double hits = 0.0;
        int elsewhere = 0;
        for (const auto& ev : path.vertex_events) {
            elsewhere += ev.vertex != 2;
            hits += ev.edge == 2;
        }
        CHECK(elsewhere == 0);
        const double n = static_cast<double>(path.vertex_events.size());
        const double se = std::sqrt(p3 * (1.0 - p3) / n);
        CHECK(std::abs(hits / n - p3) < 3.0 * se);
        // every edge change goes through a recorded event
        std::size_t changes = 0;
        for (std::size_t k = 1; k < path.points.size(); ++k)
            changes += path.points[k].edge_id != path.points[k - 1].edge_id;
        CHECK(changes <= path.vertex_events.size());
    }

    TEST_CASE("zero horizon and determinism")
    {
        const auto& d = double_well();
        GraphSimOptions o;
        o.t_final = 0.0;
        const auto p0 = simulate_graph(d.table, d.graph, {0.1, 0}, o);
        REQUIRE(p0.points.size() == 1);
        CHECK(p0.points[0].z == 0.1);
        CHECK(p0.times[0] == 0.0);

        o.t_final = 20.0;
        o.seed = 99;
        const auto a = simulate_graph(d.table, d.graph, {0.1, 0}, o);
        const auto c = simulate_graph(d.table, d.graph, {0.1, 0}, o);
        REQUIRE(a.points.size() == c.points.size());
        for (std::size_t k = 0; k < a.points.size(); ++k) {
            CHECK(a.points[k].z == c.points[k].z);
            CHECK(a.points[k].edge_id == c.points[k].edge_id);
        }
        const auto e1 = graph_endpoints(d.table, d.graph, {0.1, 0}, o, 16, 1);
        const auto e4 = graph_endpoints(d.table, d.graph, {0.1, 0}, o, 16, 4);
        for (std::size_t r = 0; r < e1.size(); ++r)
            CHECK(e1[r].z == e4[r].z);
    }

    TEST_CASE("Monte Carlo variance agrees with the solve")
    {
        const auto& d = double_well();
        const double target = limiting_variance(d.table, d.graph).estimate.value;
        GraphSimOptions o;
        o.t_final = 5000.0;
        std::vector<double> est;
        for (int r = 0; r < 8; ++r) {
            o.seed = derive_stream_seed(2024, static_cast<std::uint64_t>(r));
            const auto path = simulate_graph_observable(d.table, d.graph, {0.1, 0}, o, 20.0, 100);
            est.push_back(batch_means_variance(path.block_means, path.block_time, 200).sigma2.value);
        }
        CHECK(stats::mean(est) == doctest::Approx(target).epsilon(0.10));
    }

    TEST_CASE("vertex offset insensitivity")
    {
        const auto& d = double_well();
        double mean_z[2], top[2];
        int i = 0;
        for (double rho : {1e-3, 5e-4}) {
            GraphSimOptions o;
            o.t_final = 20000.0;
            o.thin = 10;
            o.seed = 8;
            o.vertex_offset = rho;
            const auto path = simulate_graph(d.table, d.graph, {0.1, 0}, o);
            double s = 0.0, t = 0.0;
            for (const auto& p : path.points) {
                s += p.z;
                t += p.edge_id == 2;
            }
            mean_z[i] = s / static_cast<double>(path.points.size());
            top[i] = t / static_cast<double>(path.points.size());
            ++i;
        }
        CHECK(mean_z[1] == doctest::Approx(mean_z[0]).epsilon(0.02));
        CHECK(top[1] == doctest::Approx(top[0]).epsilon(0.02));
    }

    TEST_CASE("bad input")
    {
        const auto& d = double_well();
        GraphSimOptions o;
        o.dt = 0.5;
        CHECK_THROWS_AS(simulate_graph(d.table, d.graph, {0.1, 0}, o), ValidationError);
        o.dt = 1e-3;
        CHECK_THROWS_AS(simulate_graph(d.table, d.graph, {0.3, 0}, o), ValidationError);
        o.vertex_offset = 0.0;
        CHECK_THROWS_AS(simulate_graph(d.table, d.graph, {0.1, 0}, o), ValidationError);
        o.vertex_offset = 1e-3;
        o.thin = 0;
        CHECK_THROWS_AS(simulate_graph(d.table, d.graph, {0.1, 0}, o), ValidationError);
        PoissonOptions po;
        po.spacing = 0.0;
        CHECK_THROWS_AS(solve_graph_poisson(d.table, d.graph, po), ValidationError);
    }
}
