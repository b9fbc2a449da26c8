#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "irrlab/contour.hpp"
#include "irrlab/drift.hpp"
#include "irrlab/reeb_graph.hpp"

using namespace irrlab;

namespace {

// Grid flood fill of {U <= z} from p; returns the set of minima inside the component.
std::set<int> minima_in_component(const GraphTopology& g, Vec2 p, double z, int n = 256, double half = 2.5)
{
    const auto& sc = g.scenario();
    const double h = 2 * half / n;
    auto cell_of = [&](Vec2 q) {
        return std::pair{std::clamp(static_cast<int>((q.x + half) / h), 0, n - 1),
                         std::clamp(static_cast<int>((q.y + half) / h), 0, n - 1)};
    };
    auto centre = [&](int i, int j) { return Vec2{-half + (i + 0.5) * h, -half + (j + 0.5) * h}; };
    std::vector<char> in(static_cast<std::size_t>(n * n), 0);
    auto [i0, j0] = cell_of(p);
    std::vector<std::pair<int, int>> st{{i0, j0}};
    in[static_cast<std::size_t>(i0 * n + j0)] = 1;
    while (!st.empty()) {
        auto [i, j] = st.back();
        st.pop_back();
        for (auto [a, b] : {std::pair{i + 1, j}, std::pair{i - 1, j}, std::pair{i, j + 1}, std::pair{i, j - 1}}) {
            if (a < 0 || b < 0 || a >= n || b >= n)
                continue;
            auto k = static_cast<std::size_t>(a * n + b);
            if (!in[k] && sc.u(centre(a, b)) <= z) {
                in[k] = 1;
                st.emplace_back(a, b);
            }
        }
    }
    std::set<int> out;
    for (const auto& v : g.vertices())
        if (v.kind == VertexKind::exterior_min) {
            auto [a, b] = cell_of(v.location);
            if (in[static_cast<std::size_t>(a * n + b)])
                out.insert(v.id);
        }
    return out;
}

int count_components(const Scenario& sc, double z, int n = 512, double half = 3.0)
{
    const double h = 2 * half / n;
    std::vector<int> label(static_cast<std::size_t>(n * n), 0);
    int count = 0;
    for (int s = 0; s < n * n; ++s) {
        const Vec2 c{-half + (s / n + 0.5) * h, -half + (s % n + 0.5) * h};
        if (label[static_cast<std::size_t>(s)] || sc.u(c) > z)
            continue;
        ++count;
        std::vector<int> st{s};
        label[static_cast<std::size_t>(s)] = count;
        while (!st.empty()) {
            const int k = st.back();
            st.pop_back();
            const int i = k / n;
            const int j = k % n;
            for (auto [a, b] : {std::pair{i + 1, j}, std::pair{i - 1, j}, std::pair{i, j + 1}, std::pair{i, j - 1}}) {
                if (a < 0 || b < 0 || a >= n || b >= n)
                    continue;
                const int q = a * n + b;
                const Vec2 cq{-half + (a + 0.5) * h, -half + (b + 0.5) * h};
                if (!label[static_cast<std::size_t>(q)] && sc.u(cq) <= z) {
                    label[static_cast<std::size_t>(q)] = count;
                    st.push_back(q);
                }
            }
        }
    }
    return count;
}

void check_invariants(const GraphTopology& g)
{
    const auto cat = classify_critical_points(g.scenario());
    for (const auto& e : g.edges()) {
        CHECK(e.z_lo < e.z_hi);
        CHECK(g.vertex(e.lower).z == e.z_lo);
        CHECK(g.vertex(e.upper).z == e.z_hi);
        // a critical value inside the range must belong to another component
        for (const auto& c : cat.points)
            if (c.value > e.z_lo && c.value < e.z_hi)
                CHECK(project(g, c.location).edge_id != e.id);
    }
    for (const auto& v : g.vertices()) {
        if (v.kind == VertexKind::interior_saddle)
            CHECK(v.edges.size() == 3);
        else
            CHECK(v.edges.size() == 1);
    }
}

}  // namespace

TEST_SUITE("reeb_graph")
{
    TEST_CASE("bowl graph")
    {
        const auto g = build_graph(make_bowl(), 4.0);
        REQUIRE(g.vertices().size() == 2);
        REQUIRE(g.edges().size() == 1);
        CHECK(g.vertices()[0].kind == VertexKind::exterior_min);
        CHECK(g.vertices()[0].z == doctest::Approx(0.0));
        CHECK(g.vertices()[1].kind == VertexKind::truncation_cap);
        CHECK(g.vertices()[1].z == 4.0);
        check_invariants(g);
    }

    TEST_CASE("double well graph")
    {
        const auto g = build_graph(make_double_well(), 4.0);
        REQUIRE(g.vertices().size() == 4);
        REQUIRE(g.edges().size() == 3);
        int mins = 0;
        int saddles = 0;
        for (const auto& v : g.vertices()) {
            mins += v.kind == VertexKind::exterior_min;
            saddles += v.kind == VertexKind::interior_saddle;
        }
        CHECK(mins == 2);
        CHECK(saddles == 1);
        const auto& s = g.vertex(2);
        CHECK(s.kind == VertexKind::interior_saddle);
        CHECK(s.z == doctest::Approx(0.25));
        CHECK(s.edges == std::vector<int>{0, 1, 2});
        CHECK(g.vertex(g.edge(0).lower).location.x == doctest::Approx(-1.0));
        CHECK(g.vertex(g.edge(1).lower).location.x == doctest::Approx(1.0));
        CHECK(g.edge(2).z_hi == 4.0);
        check_invariants(g);
        // sublevel component count flips from 2 to 1 at the saddle value
        CHECK(count_components(g.scenario(), 0.24) == 2);
        CHECK(count_components(g.scenario(), 0.26) == 1);
    }

    TEST_CASE("tilted double well has the same shape with unequal minima")
    {
        const auto sc = make_polynomial_scenario("tilted", parse_poly_terms("0.25:4:0, -0.5:2:0, 0.25:0:0, 0.5:0:2, 0.1:1:0"));
        const auto g = build_graph(sc, 4.0);
        REQUIRE(g.edges().size() == 3);
        check_invariants(g);
        CHECK(g.vertex(0).location.x < 0);
        CHECK(g.vertex(0).z < g.vertex(1).z);
        CHECK(project(g, {1.0, 0.0}).edge_id == 1);
    }

    TEST_CASE("rejections")
    {
        CHECK_THROWS_AS(build_graph(make_double_well(), 0.2), ValidationError);
        const auto with_max = make_polynomial_scenario("egg", parse_poly_terms("1:4:0, 1:0:4, -2:2:0, -2:0:2"));
        CHECK_THROWS_AS(build_graph(with_max, 4.0), ValidationError);
        Scenario flat("flat", std::make_shared<PolynomialPotential>(parse_poly_terms("1:4:0, 1:0:2")), {{0.1, 0.1}});
        CHECK_THROWS_AS(build_graph(flat, 4.0), ValidationError);
    }

    TEST_CASE("projection examples")
    {
        const auto g = build_graph(make_double_well(), 4.0);
        auto p = project(g, {-1, 0});
        CHECK(p.z == doctest::Approx(0.0));
        CHECK(p.edge_id == 0);
        p = project(g, {0.5, 0});
        CHECK(p.z == doctest::Approx(0.140625));
        CHECK(p.edge_id == 1);
        p = project(g, {0, 1});
        CHECK(p.z == doctest::Approx(0.75));
        CHECK(p.edge_id == 2);
        // the saddle itself goes to the x <= 0 side
        CHECK(project(g, {0, 0}).edge_id == 0);
        CHECK_THROWS_AS(project(g, {3, 0}), ValidationError);
        CHECK_THROWS_AS(project(g, {NAN, 0}), ValidationError);
        CHECK(project(build_graph(make_bowl()), {1, 1}).edge_id == 0);
    }

    TEST_CASE("projection agrees with flood fill at random points")
    {
        std::mt19937_64 gen(2024);
        std::uniform_real_distribution<double> coord(-1.9, 1.9);
        for (const auto& sc : {make_bowl(), make_double_well()}) {
            const auto g = build_graph(sc, 4.0);
            int tested = 0;
            while (tested < 1000) {
                const Vec2 p{coord(gen), coord(gen)};
                const double z = sc.u(p);
                if (z > 3.0 || std::abs(z - 0.25) < 0.02)
                    continue;
                ++tested;
                const auto got = project(g, p);
                const auto mins = minima_in_component(g, p, z);
                const auto& e = g.edge(got.edge_id);
                CHECK(std::set<int>(e.minima.begin(), e.minima.end()) == mins);
                CHECK(z >= e.z_lo);
                CHECK(z <= e.z_hi);
            }
        }
    }

    TEST_CASE("projection is constant along fast-flow orbits")
    {
        const auto g = build_graph(make_double_well(), 4.0);
        const DriftField f{g.scenario()};
        for (const Vec2 x0 : {Vec2{-1.3, 0.2}, Vec2{0.7, -0.3}, Vec2{0.0, 0.9}, Vec2{1.6, 0.0}}) {
            const int e0 = project(g, x0).edge_id;
            Vec2 x = x0;
            for (int k = 0; k < 50; ++k) {
                x = drift_flow_rk4(f, x, 0.2, 200);
                CHECK(project(g, x).edge_id == e0);
            }
        }
    }

    TEST_CASE("descent paths keep their edge until a vertex value")
    {
        const auto g = build_graph(make_double_well(), 4.0);
        const auto& sc = g.scenario();
        for (const Vec2 x0 : {Vec2{0.3, 1.2}, Vec2{-0.2, -1.0}, Vec2{1.4, 0.5}}) {
            const auto start = project(g, x0);
            Vec2 x = x0;
            for (int k = 0; k < 3000; ++k) {
                x -= 0.005 * sc.grad_u(x);
                const auto p = project(g, x);
                const auto& e = g.edge(start.edge_id);
                if (p.z > e.z_lo)
                    CHECK(p.edge_id == start.edge_id);
                else
                    CHECK(g.edge(p.edge_id).z_hi <= e.z_lo);
            }
        }
    }

    TEST_CASE("level components carry no critical point between vertex values")
    {
        const auto g = build_graph(make_double_well(), 4.0);
        for (const auto& e : g.edges())
            for (int k = 1; k < 8; ++k) {
                const double z = e.z_lo + (e.z_hi - e.z_lo) * k / 8.0;
                const auto c = extract_level_contour(g.scenario(), z, g.edge_seed(e.id), {256, 64});
                double gmin = INFINITY;
                for (const Vec2 p : c.points)
                    gmin = std::min(gmin, norm(g.scenario().grad_u(p)));
                CHECK(gmin > 1e-3);
            }
    }
}
