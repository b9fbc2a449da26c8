#include <doctest.h>

#include <cmath>
#include <random>

#include "irrlab/potential.hpp"
#include "irrlab/rng.hpp"

using namespace irrlab;

namespace {

Vec2 fd_gradient(const Scenario& s, Vec2 p, double h = 1e-5)
{
    return {(s.u({p.x + h, p.y}) - s.u({p.x - h, p.y})) / (2 * h),
            (s.u({p.x, p.y + h}) - s.u({p.x, p.y - h})) / (2 * h)};
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE("potential")
{
    TEST_CASE("philox known answers")
    {
        using C = Philox4x32::Counter;
        CHECK(Philox4x32::apply({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
        CHECK(Philox4x32::apply({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
              C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
        CHECK(Philox4x32::apply({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
              C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
    }

    TEST_CASE("counter rng is random access and roughly normal")
    {
        const CounterRng a(42);
        const CounterRng b(42);
        CHECK(a.normal_pair(1000)[0] == b.normal_pair(1000)[0]);
        CHECK(a.bits(5) != CounterRng(43).bits(5));
        double s = 0, s2 = 0;
        const int n = 100000;
        for (int k = 0; k < n; ++k) {
            const auto z = a.normal_pair(static_cast<std::uint64_t>(k));
            s += z[0] + z[1];
            s2 += z[0] * z[0] + z[1] * z[1];
        }
        CHECK(std::abs(s / (2 * n)) < 0.01);
        CHECK(std::abs(s2 / (2 * n) - 1.0) < 0.02);
    }

    TEST_CASE("eval_gradient examples")
    {
        const auto bowl = make_bowl();
        const auto dw = make_double_well();
        CHECK(eval_gradient(bowl, {1, 0}) == Vec2{1, 0});
        CHECK(eval_gradient(dw, {0, 0}) == Vec2{0, 0});
        const Vec2 g = eval_gradient(dw, {2, 1});
        const Vec2 fd = fd_gradient(dw, {2, 1});
        CHECK(g.x == doctest::Approx(fd.x).epsilon(1e-8));
        CHECK(g.y == doctest::Approx(fd.y).epsilon(1e-8));
        CHECK(g.x == doctest::Approx(6.0));
        CHECK_THROWS_AS(eval_gradient(dw, {NAN, 0}), ValidationError);
        CHECK_THROWS_AS(eval_gradient(dw, {0, INFINITY}), ValidationError);
    }

    TEST_CASE("derivatives agree with finite differences at random probes")
    {
        std::mt19937_64 gen(1234);
        std::uniform_real_distribution<double> coord(-3.0, 3.0);
        const std::vector<Scenario> all{make_bowl(), make_double_well(),
                                        make_polynomial_scenario("poly", parse_poly_terms("1:4:0, -2:2:0, 0.5:1:1, 1:0:2"))};
        for (const auto& s : all) {
            for (int k = 0; k < 100; ++k) {
                const Vec2 p{coord(gen), coord(gen)};
                const Vec2 g = s.grad_u(p);
                const Vec2 fd = fd_gradient(s, p);
                CHECK(rel_err(g.x, fd.x) <= 1e-6);
                CHECK(rel_err(g.y, fd.y) <= 1e-6);
                const double h = 1e-5;
                const Mat2 hs = s.hess_u(p);
                const Vec2 gxp = s.grad_u({p.x + h, p.y});
                const Vec2 gxm = s.grad_u({p.x - h, p.y});
                const Vec2 gyp = s.grad_u({p.x, p.y + h});
                const Vec2 gym = s.grad_u({p.x, p.y - h});
                CHECK(rel_err(hs.xx, (gxp.x - gxm.x) / (2 * h)) <= 1e-6);
                CHECK(rel_err(hs.xy, (gxp.y - gxm.y) / (2 * h)) <= 1e-6);
                CHECK(rel_err(hs.yy, (gyp.y - gym.y) / (2 * h)) <= 1e-6);
                CHECK(s.laplacian_u(p) == doctest::Approx(hs.trace()).epsilon(1e-15));
            }
        }
    }

    TEST_CASE("critical points of the shipped scenarios")
    {
        const auto bowl = classify_critical_points(make_bowl());
        REQUIRE(bowl.points.size() == 1);
        CHECK(bowl.points[0].kind == CriticalKind::minimum);
        CHECK(norm(bowl.points[0].location) < 1e-12);
        CHECK(bowl.points[0].value == doctest::Approx(0.0));

        const auto dw = make_double_well();
        const auto cat = classify_critical_points(dw);
        REQUIRE(cat.points.size() == 3);
        CHECK(cat.dropped_seeds.empty());
        CHECK(cat.points[0].kind == CriticalKind::minimum);
        CHECK(cat.points[0].location.x == doctest::Approx(-1.0));
        CHECK(cat.points[1].kind == CriticalKind::minimum);
        CHECK(cat.points[1].location.x == doctest::Approx(1.0));
        CHECK(cat.points[2].kind == CriticalKind::saddle);
        CHECK(cat.points[2].value == doctest::Approx(0.25));
        for (const auto& c : cat.points) {
            CHECK(norm(dw.grad_u(c.location)) <= 1e-12);
            const auto e = eigen_decompose(dw.hess_u(c.location));
            CHECK(std::min(std::abs(e.lo), std::abs(e.hi)) > 1e-8);
        }
        const auto e = eigen_decompose(dw.hess_u({0, 0}));
        CHECK(e.lo == doctest::Approx(-1.0));
        CHECK(e.hi == doctest::Approx(1.0));
    }

    TEST_CASE("non-convergent seeds are reported and dropped")
    {
        Scenario s("bad", std::make_shared<DoubleWell>(), {{-0.9, 0.0}, {NAN, 0.0}});
        const auto cat = classify_critical_points(s);
        CHECK(cat.points.size() == 1);
        CHECK(cat.dropped_seeds.size() == 1);
    }

    TEST_CASE("degenerate critical points are rejected")
    {
        Scenario s("flat", std::make_shared<PolynomialPotential>(parse_poly_terms("1:4:0, 1:0:2")), {{0.0, 0.0}});
        CHECK_THROWS_AS(classify_critical_points(s), ValidationError);
        CHECK_THROWS_AS(classify_hessian({0.0, 0.0, 1.0}), ValidationError);
        CHECK(classify_hessian({-1.0, 0.0, -2.0}) == CriticalKind::maximum);
    }

    TEST_CASE("polynomial double well matches the hand-coded one")
    {
        const auto poly = make_polynomial_scenario("dw_poly", parse_poly_terms("0.25:4:0, -0.5:2:0, 0.25:0:0, 0.5:0:2"));
        const auto cat = classify_critical_points(poly);
        REQUIRE(cat.points.size() == 3);
        CHECK(cat.points[0].location.x == doctest::Approx(-1.0));
        CHECK(cat.points[1].location.x == doctest::Approx(1.0));
        CHECK(cat.points[2].kind == CriticalKind::saddle);
        const auto dw = make_double_well();
        CHECK(poly.u({0.3, -0.7}) == doctest::Approx(dw.u({0.3, -0.7})));
    }

    TEST_CASE("polynomial term parsing")
    {
        const auto t = parse_poly_terms(" 1.5:2:0 , -3:0:1");
        REQUIRE(t.size() == 2);
        CHECK(t[0].coeff == 1.5);
        CHECK(t[1].py == 1);
        CHECK_THROWS_AS(parse_poly_terms("1:2"), ValidationError);
        CHECK_THROWS_AS(parse_poly_terms("a:1:1"), ValidationError);
        CHECK_THROWS_AS(parse_poly_terms(""), ValidationError);
        CHECK_THROWS_AS(parse_poly_terms("1:-1:0"), ValidationError);
    }

    TEST_CASE("observables and scenario lookup")
    {
        for (const auto& name : shipped_scenario_names()) {
            const auto s = scenario_by_name(name);
            CHECK(s.observable("f2")({1.0, 2.0}) == 5.0);
        }
        CHECK_THROWS_AS(scenario_by_name("nope"), ValidationError);
        CHECK_THROWS_AS(make_bowl().observable("nope"), ValidationError);
        CHECK(make_constant_observable(0.3)({7, 8}) == 0.3);
    }

    TEST_CASE("gibbs log density examples")
    {
        CHECK(gibbs_log_density({make_bowl(), 0.1}, {0, 0}) == 0.0);
        CHECK(gibbs_log_density({make_bowl(), 0.1}, {1, 0}) == doctest::Approx(-5.0));
        CHECK(gibbs_log_density({make_double_well(), 0.1}, {0, 0}) == doctest::Approx(-2.5));
        CHECK_THROWS_AS(gibbs_log_density({make_bowl(), 0.0}, {0, 0}), ValidationError);
        CHECK_THROWS_AS(gibbs_log_density({make_bowl(), -1.0}, {0, 0}), ValidationError);
    }

    TEST_CASE("gibbs quadrature reproduces gaussian moments")
    {
        const GibbsSpec g{make_bowl(), 0.1};
        // E[x^2 + y^2] = 2 beta for the bowl
        CHECK(gibbs_expectation(g, g.scenario.observable("f2"), {Box::square(4.0), 1024}) ==
              doctest::Approx(0.2).epsilon(1e-6));
        CHECK(gibbs_tail_mass(g, Box::square(4.0), {Box::square(8.0), 512}) < 1e-20);
        const auto xs = sample_gibbs_quadrature(g, 50000, 3);
        double m2 = 0;
        for (const Vec2 p : xs)
            m2 += p.x * p.x;
        CHECK(m2 / xs.size() == doctest::Approx(0.1).epsilon(0.03));
    }
}
