#include "irrlab/contour.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <unordered_map>

#include <boost/math/tools/toms748_solve.hpp>

namespace irrlab {

Vec2 project_to_level(const Scenario& scenario, Vec2 p, double z, int iterations)
{
    for (int k = 0; k < iterations; ++k) {
        const Vec2 g = scenario.grad_u(p);
        const double g2 = dot(g, g);
        if (g2 == 0.0)
            break;
        p -= ((scenario.u(p) - z) / g2) * g;
    }
    return p;
}

namespace {

struct NodeGrid {
    Box box;
    int n = 0;  // cells per side
    double hx = 0.0;
    double hy = 0.0;
    std::vector<double> u;
    std::vector<std::uint8_t> in;

    std::size_t id(int i, int j) const { return static_cast<std::size_t>(i) * static_cast<std::size_t>(n + 1) + static_cast<std::size_t>(j); }
    Vec2 node(int i, int j) const { return {box.xmin + i * hx, box.ymin + j * hy}; }
};

// Fills the component of {U < z} around seed on an (n+1)^2 node grid.
// Returns true when the component touches the grid boundary.
bool fill_component(const Scenario& sc, double z, Vec2 seed, const Box& box, int n, NodeGrid& g)
{
    g.box = box;
    g.n = n;
    g.hx = box.width() / n;
    g.hy = box.height() / n;
    const std::size_t total = static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1);
    g.u.assign(total, 0.0);
    g.in.assign(total, 0);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            g.u[g.id(i, j)] = sc.u(g.node(i, j));

    // nearest node below z to the seed
    const int si = std::clamp(static_cast<int>(std::lround((seed.x - box.xmin) / g.hx)), 0, n);
    const int sj = std::clamp(static_cast<int>(std::lround((seed.y - box.ymin) / g.hy)), 0, n);
    int bi = -1;
    int bj = -1;
    double best = INFINITY;
    for (int di = -3; di <= 3; ++di)
        for (int dj = -3; dj <= 3; ++dj) {
            const int i = si + di;
            const int j = sj + dj;
            if (i < 0 || j < 0 || i > n || j > n || g.u[g.id(i, j)] >= z)
                continue;
            const double d = norm(g.node(i, j) - seed);
            if (d < best) {
                best = d;
                bi = i;
                bj = j;
            }
        }
    if (bi < 0) {
        std::ostringstream msg;
        msg << "level " << z << ": no grid node below the level near the seed (component thinner than the grid)";
        throw GeometryError(msg.str());
    }
    bool touches = false;
    std::vector<std::pair<int, int>> stack{{bi, bj}};
    g.in[g.id(bi, bj)] = 1;
    while (!stack.empty()) {
        const auto [i, j] = stack.back();
        stack.pop_back();
        if (i == 0 || j == 0 || i == n || j == n)
            touches = true;
        const std::array<std::pair<int, int>, 4> nb{{{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}}};
        for (const auto& [a, b] : nb) {
            if (a < 0 || b < 0 || a > n || b > n)
                continue;
            const auto k = g.id(a, b);
            if (!g.in[k] && g.u[k] < z) {
                g.in[k] = 1;
                stack.emplace_back(a, b);
            }
        }
    }
    return touches;
}

Box filled_bounds(const NodeGrid& g, int margin)
{
    int imin = g.n;
    int imax = 0;
    int jmin = g.n;
    int jmax = 0;
    for (int i = 0; i <= g.n; ++i)
        for (int j = 0; j <= g.n; ++j)
            if (g.in[g.id(i, j)]) {
                imin = std::min(imin, i);
                imax = std::max(imax, i);
                jmin = std::min(jmin, j);
                jmax = std::max(jmax, j);
            }
    return {g.box.xmin + (imin - margin) * g.hx, g.box.xmin + (imax + margin) * g.hx,
            g.box.ymin + (jmin - margin) * g.hy, g.box.ymin + (jmax + margin) * g.hy};
}

Box grow(const Box& b, double frac)
{
    const double dx = frac * b.width();
    const double dy = frac * b.height();
    return {b.xmin - dx, b.xmax + dx, b.ymin - dy, b.ymax + dy};
}

double shoelace(const std::vector<Vec2>& poly, Vec2& centroid)
{
    double a = 0.0;
    Vec2 c{};
    for (std::size_t k = 0; k < poly.size(); ++k) {
        const Vec2 p = poly[k];
        const Vec2 q = poly[(k + 1) % poly.size()];
        const double cr = p.x * q.y - q.x * p.y;
        a += cr;
        c += cr * (p + q);
    }
    if (a == 0.0) {
        centroid = poly.front();
        return 0.0;
    }
    centroid = (1.0 / (3.0 * a)) * c;
    return 0.5 * std::abs(a);
}

}  // namespace

LevelContour extract_level_contour(const Scenario& sc, double z, Vec2 seed, const ContourOptions& options)
{
    if (!std::isfinite(z))
        throw ValidationError("contour level must be finite");
    if (!(sc.u(seed) < z)) {
        std::ostringstream msg;
        msg << "contour seed (" << seed.x << ", " << seed.y << ") is not below level " << z;
        throw GeometryError(msg.str());
    }
    if (options.resolution < 16 || options.coarse_resolution < 16)
        throw ValidationError("contour resolution must be >= 16");

    // coarse search region, doubled until the component is enclosed
    NodeGrid coarse;
    double half = 0.5;
    for (;;) {
        const Box b{seed.x - half, seed.x + half, seed.y - half, seed.y + half};
        if (!fill_component(sc, z, seed, b, options.coarse_resolution, coarse))
            break;
        half *= 2.0;
        if (half > 1e3)
            throw GeometryError("level set component is unbounded within the search limit");
    }
    Box box = filled_bounds(coarse, 2);

    NodeGrid g;
    int attempts = 0;
    while (fill_component(sc, z, seed, box, options.resolution, g)) {
        box = grow(box, 0.25);
        if (++attempts > 6)
            throw GeometryError("fine contour grid cannot enclose the component");
    }
    const int n = g.n;

    LevelContour out;
    out.z = z;
    out.box = box;
    out.resolution = n;

    // crossings on grid edges; key = 2 * node id (+1 for the vertical edge)
    std::unordered_map<std::uint64_t, int> crossing_id;
    auto crossing = [&](int ia, int ja, int ib, int jb) -> int {
        const bool vertical = ia == ib;
        const int i0 = std::min(ia, ib);
        const int j0 = std::min(ja, jb);
        const std::uint64_t key = 2 * g.id(i0, j0) + (vertical ? 1 : 0);
        if (auto it = crossing_id.find(key); it != crossing_id.end())
            return it->second;
        // orient a inside, b outside
        if (!g.in[g.id(ia, ja)]) {
            std::swap(ia, ib);
            std::swap(ja, jb);
        }
        const Vec2 a = g.node(ia, ja);
        const Vec2 b = g.node(ib, jb);
        const double fb = g.u[g.id(ib, jb)] - z;
        if (fb < 0.0) {
            std::ostringstream msg;
            msg << "level " << z << ": two components of the sublevel set meet within one grid cell near (" << b.x
                << ", " << b.y << ")";
            throw GeometryError(msg.str());
        }
        Vec2 p = b;
        if (fb > 0.0) {
            const auto f = [&](double t) { return sc.u(a + t * (b - a)) - z; };
            std::uintmax_t iters = 60;
            const auto r = boost::math::tools::toms748_solve(f, 0.0, 1.0, g.u[g.id(ia, ja)] - z, fb,
                                                             boost::math::tools::eps_tolerance<double>(52), iters);
            p = a + (0.5 * (r.first + r.second)) * (b - a);
        }
        const int idx = static_cast<int>(out.points.size());
        out.points.push_back(p);
        crossing_id.emplace(key, idx);
        return idx;
    };

    std::vector<std::array<int, 2>> adj;
    auto link = [&](int a, int b) {
        adj.resize(out.points.size(), {-1, -1});
        for (const auto& [p, q] : {std::pair{a, b}, std::pair{b, a}}) {
            auto& slot = adj[static_cast<std::size_t>(p)];
            if (slot[0] < 0)
                slot[0] = q;
            else if (slot[1] < 0)
                slot[1] = q;
            else
                throw GeometryError("marching squares produced a non-manifold crossing");
        }
    };

    const double cell_area = g.hx * g.hy;
    double area = 0.0;
    double lap = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const std::array<std::pair<int, int>, 4> c{{{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}}};
            std::array<bool, 4> in{};
            int n_in = 0;
            for (int k = 0; k < 4; ++k) {
                in[static_cast<std::size_t>(k)] = g.in[g.id(c[static_cast<std::size_t>(k)].first, c[static_cast<std::size_t>(k)].second)] != 0;
                n_in += in[static_cast<std::size_t>(k)];
            }
            if (n_in == 0)
                continue;
            const Vec2 centre{g.box.xmin + (i + 0.5) * g.hx, g.box.ymin + (j + 0.5) * g.hy};
            if (n_in == 4) {
                area += cell_area;
                lap += cell_area * sc.laplacian_u(centre);
                continue;
            }
            // crossing on perimeter edge k (corner k -> corner k+1)
            std::array<int, 4> x{-1, -1, -1, -1};
            for (int k = 0; k < 4; ++k) {
                const auto k1 = static_cast<std::size_t>((k + 1) % 4);
                const auto kk = static_cast<std::size_t>(k);
                if (in[kk] != in[k1])
                    x[kk] = crossing(c[kk].first, c[kk].second, c[k1].first, c[k1].second);
            }
            const bool ambiguous = n_in == 2 && in[0] == in[2];
            const bool centre_in = ambiguous && sc.u(centre) < z;
            auto pt = [&](int k) { return out.points[static_cast<std::size_t>(x[static_cast<std::size_t>(k)])]; };
            auto corner = [&](int k) { return g.node(c[static_cast<std::size_t>(k)].first, c[static_cast<std::size_t>(k)].second); };
            auto add_polygon = [&](const std::vector<Vec2>& poly) {
                Vec2 cen;
                const double a = shoelace(poly, cen);
                area += a;
                lap += a * sc.laplacian_u(cen);
            };
            if (!ambiguous || centre_in) {
                std::vector<Vec2> poly;
                for (int k = 0; k < 4; ++k) {
                    if (in[static_cast<std::size_t>(k)])
                        poly.push_back(corner(k));
                    if (x[static_cast<std::size_t>(k)] >= 0)
                        poly.push_back(pt(k));
                }
                add_polygon(poly);
            }
            if (!ambiguous) {
                int first = -1;
                int second = -1;
                for (int k = 0; k < 4; ++k)
                    if (x[static_cast<std::size_t>(k)] >= 0)
                        (first < 0 ? first : second) = x[static_cast<std::size_t>(k)];
                link(first, second);
                continue;
            }
            // ambiguous saddle cell: pair edges around the corners that get cut off
            const bool cut_inside = !centre_in;
            for (int k = 0; k < 4; ++k) {
                if (in[static_cast<std::size_t>(k)] != cut_inside)
                    continue;
                const int prev = (k + 3) % 4;  // edge entering corner k
                link(x[static_cast<std::size_t>(prev)], x[static_cast<std::size_t>(k)]);
                if (cut_inside)
                    add_polygon({pt(prev), corner(k), pt(k)});
            }
        }

    if (out.points.size() < 3)
        throw GeometryError("contour has fewer than three points; refine the grid");
    adj.resize(out.points.size(), {-1, -1});
    // walk loops
    std::vector<std::uint8_t> seen(out.points.size(), 0);
    std::vector<Vec2> ordered;
    int loops = 0;
    for (std::size_t start = 0; start < out.points.size(); ++start) {
        if (seen[start])
            continue;
        ++loops;
        int prev = -1;
        auto cur = static_cast<int>(start);
        while (!seen[static_cast<std::size_t>(cur)]) {
            seen[static_cast<std::size_t>(cur)] = 1;
            if (loops == 1)
                ordered.push_back(out.points[static_cast<std::size_t>(cur)]);
            const auto& a = adj[static_cast<std::size_t>(cur)];
            if (a[0] < 0 || a[1] < 0)
                throw GeometryError("contour is not closed");
            const int next = a[0] != prev ? a[0] : a[1];
            prev = cur;
            cur = next;
        }
    }
    if (loops != 1) {
        std::ostringstream msg;
        msg << "level " << z << ": expected one closed contour, found " << loops;
        throw GeometryError(msg.str());
    }
    out.points = std::move(ordered);

    // projected midpoints and the curved-boundary correction to the cut cells
    const std::size_t np = out.points.size();
    out.mids.resize(np);
    for (std::size_t k = 0; k < np; ++k) {
        const Vec2 p0 = out.points[k];
        const Vec2 p1 = out.points[(k + 1) % np];
        const Vec2 cm = 0.5 * (p0 + p1);
        const Vec2 m = project_to_level(sc, cm, z);
        out.mids[k] = m;
        const Vec2 gr = sc.grad_u(cm);
        const double gn = norm(gr);
        if (gn == 0.0)
            continue;
        const double d = dot(m - cm, gr) / gn;
        const double sliver = (2.0 / 3.0) * norm(p1 - p0) * d;
        area += sliver;
        lap += sliver * sc.laplacian_u(m);
    }
    out.interior_area = area;
    out.interior_laplacian = lap;
    return out;
}

LevelContour analytic_level_contour(const Scenario& scenario, double z, const AnalyticContour& param, int n_points,
                                    Vec2 seed, const ContourOptions& options)
{
    if (n_points < 8)
        throw ValidationError("analytic contour needs at least 8 points");
    auto out = extract_level_contour(scenario, z, seed, options);
    const auto dense = param(z, 2 * n_points);
    if (dense.size() != static_cast<std::size_t>(2 * n_points))
        throw GeometryError("analytic contour returned the wrong number of points");
    out.points.clear();
    out.mids.clear();
    for (int k = 0; k < n_points; ++k) {
        out.points.push_back(dense[static_cast<std::size_t>(2 * k)]);
        out.mids.push_back(dense[static_cast<std::size_t>(2 * k + 1)]);
    }
    return out;
}

std::vector<double> contour_integrals(const Scenario& scenario, const LevelContour& contour,
                                      const std::vector<std::function<double(Vec2)>>& gs)
{
    (void)scenario;
    static constexpr std::array<double, 3> t{0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
    static constexpr std::array<double, 3> w{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    std::vector<double> acc(gs.size(), 0.0);
    const std::size_t np = contour.points.size();
    for (std::size_t k = 0; k < np; ++k) {
        const Vec2 p0 = contour.points[k];
        const Vec2 m = contour.mids[k];
        const Vec2 p1 = contour.points[(k + 1) % np];
        for (std::size_t q = 0; q < 3; ++q) {
            const double s = t[q];
            const Vec2 gam = (1 - s) * (1 - 2 * s) * p0 + 4 * s * (1 - s) * m + s * (2 * s - 1) * p1;
            const Vec2 d = (4 * s - 3) * p0 + (4 - 8 * s) * m + (4 * s - 1) * p1;
            const double ds = w[q] * norm(d);
            for (std::size_t i = 0; i < gs.size(); ++i)
                acc[i] += ds * gs[i](gam);
        }
    }
    return acc;
}

double contour_integral(const Scenario& scenario, const LevelContour& contour, const std::function<double(Vec2)>& g)
{
    return contour_integrals(scenario, contour, {g}).front();
}

}  // namespace irrlab
