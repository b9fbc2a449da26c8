#pragma once

#include <functional>
#include <vector>

#include "irrlab/potential.hpp"

namespace irrlab {

/// One closed component of {U = z}, extracted by marching squares on a node
/// grid. `points` are exact crossings on grid edges in traversal order (the
/// loop closes from back() to front()); `mids[k]` is the curve point between
/// points[k] and points[k+1], found by projecting the chord midpoint.
struct LevelContour {
    double z = 0.0;
    std::vector<Vec2> points;
    std::vector<Vec2> mids;
    Box box;
    int resolution = 0;
    /// Area integral of the Laplacian over the enclosed sublevel component,
    /// cut-cell quadrature plus a curved-boundary correction.
    double interior_laplacian = 0.0;
    double interior_area = 0.0;
};

struct ContourOptions {
    int resolution = 1024;
    int coarse_resolution = 128;
};

/// Component of {U <= z} that contains `seed` (a point with U(seed) < z),
/// and its boundary loop. Throws GeometryError when the component is not a
/// single closed loop inside the search region.
LevelContour extract_level_contour(const Scenario& scenario, double z, Vec2 seed,
                                   const ContourOptions& options = {});

/// Contour from exact points of an analytic parametrization. The interior
/// integrals still come from the grid extraction around `seed`.
LevelContour analytic_level_contour(const Scenario& scenario, double z, const AnalyticContour& param,
                                    int n_points, Vec2 seed, const ContourOptions& options = {});

/// Line integral of g along the contour, g(p) * dl, using a quadratic arc
/// through each (point, mid, next point) and 3-point Gauss-Legendre.
double contour_integral(const Scenario& scenario, const LevelContour& contour,
                        const std::function<double(Vec2)>& g);

/// Several line integrals in one pass; returns one value per integrand.
std::vector<double> contour_integrals(const Scenario& scenario, const LevelContour& contour,
                                      const std::vector<std::function<double(Vec2)>>& gs);

/// Newton projection of p onto {U = z} along the gradient.
Vec2 project_to_level(const Scenario& scenario, Vec2 p, double z, int iterations = 4);

}  // namespace irrlab
