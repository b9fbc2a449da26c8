#include <doctest.h>

#include <cmath>
#include <numbers>

#include "irrlab/contour.hpp"

using namespace irrlab;

TEST_SUITE("contour")
{
    TEST_CASE("bowl circles from the grid extraction")
    {
        const auto bowl = make_bowl();
        for (double z : {0.004, 0.3, 2.0, 3.9}) {
            const auto c = extract_level_contour(bowl, z, {0, 0});
            const double r = std::sqrt(2 * z);
            for (const Vec2 p : c.points)
                CHECK(norm(p) == doctest::Approx(r).epsilon(1e-12));
            const auto v = contour_integrals(bowl, c, {[&](Vec2 p) { return 1.0 / norm(bowl.grad_u(p)); },
                                                       [](Vec2) { return 1.0; }});
            CHECK(v[0] == doctest::Approx(2 * std::numbers::pi).epsilon(1e-7));
            CHECK(v[1] == doctest::Approx(2 * std::numbers::pi * r).epsilon(1e-7));
            CHECK(c.interior_area == doctest::Approx(2 * std::numbers::pi * z).epsilon(1e-7));
            CHECK(c.interior_laplacian == doctest::Approx(4 * std::numbers::pi * z).epsilon(1e-7));
        }
    }

    TEST_CASE("analytic bowl contour")
    {
        const auto bowl = make_bowl();
        const auto c = analytic_level_contour(bowl, 0.7, *bowl.analytic_contour(), 2048, {0, 0});
        CHECK(c.points.size() == 2048);
        const double len = contour_integral(bowl, c, [](Vec2) { return 1.0; });
        CHECK(len == doctest::Approx(2 * std::numbers::pi * std::sqrt(1.4)).epsilon(1e-10));
    }

    TEST_CASE("double well lobes and the outer loop")
    {
        const auto dw = make_double_well();
        const auto left = extract_level_contour(dw, 0.2, {-1, 0});
        const auto right = extract_level_contour(dw, 0.2, {1, 0});
        for (const Vec2 p : left.points)
            CHECK(p.x < 0);
        CHECK(left.interior_area == doctest::Approx(right.interior_area).epsilon(1e-9));
        const auto outer = extract_level_contour(dw, 0.3, {1, 0});
        CHECK(outer.box.xmin < -1.0);
        // below the saddle value a seed at the saddle is outside every component
        CHECK_THROWS_AS(extract_level_contour(dw, 0.2, {0, 0}), GeometryError);
    }

    TEST_CASE("bad input")
    {
        const auto bowl = make_bowl();
        CHECK_THROWS_AS(extract_level_contour(bowl, NAN, {0, 0}), ValidationError);
        CHECK_THROWS_AS(extract_level_contour(bowl, 1.0, {0, 0}, {8, 128}), ValidationError);
    }
}
