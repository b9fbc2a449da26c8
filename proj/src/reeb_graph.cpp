#include "irrlab/reeb_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace irrlab {

std::string to_string(VertexKind kind)
{
    switch (kind) {
    case VertexKind::exterior_min: return "exterior_min";
    case VertexKind::interior_saddle: return "interior_saddle";
    case VertexKind::truncation_cap: return "truncation_cap";
    }
    return "?";
}

GraphTopology::GraphTopology(Scenario scenario, double z_max, std::vector<GraphVertex> vertices,
                             std::vector<GraphEdge> edges)
    : scenario_(std::move(scenario)), z_max_(z_max), vertices_(std::move(vertices)), edges_(std::move(edges))
{
}

const GraphVertex& GraphTopology::vertex(int id) const
{
    if (id < 0 || id >= static_cast<int>(vertices_.size()))
        throw ValidationError("no vertex with id " + std::to_string(id));
    return vertices_[static_cast<std::size_t>(id)];
}

const GraphEdge& GraphTopology::edge(int id) const
{
    if (id < 0 || id >= static_cast<int>(edges_.size()))
        throw ValidationError("no edge with id " + std::to_string(id));
    return edges_[static_cast<std::size_t>(id)];
}

Vec2 GraphTopology::edge_seed(int edge_id) const
{
    return vertex(edge(edge_id).minima.front()).location;
}

double GraphTopology::z_min() const
{
    double z = INFINITY;
    for (const auto& v : vertices_)
        z = std::min(z, v.z);
    return z;
}

namespace {

Vec2 gradient_descent(const Scenario& sc, Vec2 x)
{
    double h = 0.1;
    double ux = sc.u(x);
    for (int it = 0; it < 200000; ++it) {
        const Vec2 g = sc.grad_u(x);
        if (norm(g) < 1e-10)
            break;
        const Vec2 trial = x - h * g;
        const double ut = sc.u(trial);
        if (ut < ux) {
            x = trial;
            ux = ut;
            h = std::min(h * 1.5, 10.0);
        } else {
            h *= 0.5;
            if (h < 1e-18)
                break;
        }
    }
    return x;
}

int nearest_vertex(const std::vector<GraphVertex>& vs, Vec2 x)
{
    int best = -1;
    double bd = INFINITY;
    for (const auto& v : vs) {
        if (v.kind == VertexKind::truncation_cap)
            continue;
        const double d = norm(v.location - x);
        if (d < bd) {
            bd = d;
            best = v.id;
        }
    }
    return best;
}

}  // namespace

int descend_to_vertex(const GraphTopology& topology, Vec2 point)
{
    return nearest_vertex(topology.vertices(), gradient_descent(topology.scenario(), point));
}

GraphTopology build_graph(const Scenario& scenario, double z_max)
{
    if (!std::isfinite(z_max))
        throw ValidationError("z_max must be finite");
    const auto cat = classify_critical_points(scenario);
    if (cat.points.empty())
        throw ValidationError("scenario '" + scenario.name() + "' has no critical points");

    std::vector<GraphVertex> vs;
    std::vector<CriticalPoint> saddles;
    for (const auto& c : cat.points) {
        if (c.kind == CriticalKind::maximum)
            throw ValidationError("local maxima are not supported by the graph construction");
        if (c.value >= z_max) {
            std::ostringstream msg;
            msg << "critical value " << c.value << " is not below z_max = " << z_max;
            throw ValidationError(msg.str());
        }
        if (c.kind == CriticalKind::minimum) {
            GraphVertex v;
            v.id = static_cast<int>(vs.size());
            v.z = c.value;
            v.kind = VertexKind::exterior_min;
            v.location = c.location;
            v.hessian_det = scenario.hess_u(c.location).det();
            vs.push_back(v);
        } else {
            saddles.push_back(c);
        }
    }
    if (vs.empty())
        throw ValidationError("scenario has no minima");

    std::vector<GraphEdge> es;
    std::vector<int> open_edge(vs.size());  // component root (minimum index) -> open edge id
    std::vector<int> parent(vs.size());
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](int a) {
        while (parent[static_cast<std::size_t>(a)] != a)
            a = parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
        return a;
    };
    for (auto& v : vs) {
        GraphEdge e;
        e.id = static_cast<int>(es.size());
        e.z_lo = v.z;
        e.lower = v.id;
        e.minima = {v.id};
        v.edges.push_back(e.id);
        open_edge[static_cast<std::size_t>(v.id)] = e.id;
        es.push_back(e);
    }

    const std::size_t n_min = vs.size();
    for (const auto& s : saddles) {
        GraphVertex v;
        v.id = static_cast<int>(vs.size());
        v.z = s.value;
        v.kind = VertexKind::interior_saddle;
        v.location = s.location;
        const Mat2 h = scenario.hess_u(s.location);
        v.hessian_det = h.det();
        v.unstable_direction = eigen_decompose(h).v_lo;
        const double eps = 1e-3;
        int sides[2];
        for (int k = 0; k < 2; ++k) {
            const Vec2 start = s.location + (k == 0 ? -eps : eps) * v.unstable_direction;
            const Vec2 end = gradient_descent(scenario, start);
            int best = -1;
            double bd = INFINITY;
            for (std::size_t m = 0; m < n_min; ++m) {
                const double d = norm(vs[m].location - end);
                if (d < bd) {
                    bd = d;
                    best = static_cast<int>(m);
                }
            }
            if (bd > 1e-3)
                throw GeometryError("descent from saddle did not reach a minimum");
            sides[k] = find(best);
        }
        if (sides[0] == sides[1])
            throw GeometryError("saddle joins a component to itself (requires a local maximum; unsupported)");
        GraphEdge up;
        up.id = static_cast<int>(es.size());
        up.z_lo = v.z;
        up.lower = v.id;
        for (const int root : sides) {
            auto& e = es[static_cast<std::size_t>(open_edge[static_cast<std::size_t>(root)])];
            e.z_hi = v.z;
            e.upper = v.id;
            v.edges.push_back(e.id);
            up.minima.insert(up.minima.end(), e.minima.begin(), e.minima.end());
        }
        std::sort(up.minima.begin(), up.minima.end());
        v.edges.push_back(up.id);
        parent[static_cast<std::size_t>(sides[1])] = sides[0];
        open_edge[static_cast<std::size_t>(sides[0])] = up.id;
        es.push_back(up);
        vs.push_back(v);
    }

    std::vector<int> roots;
    for (std::size_t m = 0; m < n_min; ++m)
        if (find(static_cast<int>(m)) == static_cast<int>(m))
            roots.push_back(static_cast<int>(m));
    if (roots.size() != 1)
        throw GeometryError("critical point catalog is incomplete: sublevel components do not merge to one");
    GraphVertex cap;
    cap.id = static_cast<int>(vs.size());
    cap.z = z_max;
    cap.kind = VertexKind::truncation_cap;
    cap.location = {NAN, NAN};
    auto& top = es[static_cast<std::size_t>(open_edge[static_cast<std::size_t>(roots[0])])];
    top.z_hi = z_max;
    top.upper = cap.id;
    cap.edges.push_back(top.id);
    vs.push_back(cap);

    for (const auto& e : es)
        if (!(e.z_lo < e.z_hi))
            throw GeometryError("edge " + GraphTopology::edge_label(e.id) + " has an empty z-range");
    return GraphTopology(scenario, z_max, std::move(vs), std::move(es));
}

GraphPoint project(const GraphTopology& topology, Vec2 point)
{
    if (!is_finite(point))
        throw ValidationError("project: non-finite point");
    const double z = topology.scenario().u(point);
    if (z > topology.z_max()) {
        std::ostringstream msg;
        msg << "point lies above the truncated graph (U = " << z << " > z_max = " << topology.z_max() << ")";
        throw ValidationError(msg.str());
    }
    const auto& vs = topology.vertices();
    const auto& cap = vs.back();
    const int top_edge = cap.edges.front();
    double top_saddle = -INFINITY;
    for (const auto& v : vs)
        if (v.kind == VertexKind::interior_saddle)
            top_saddle = std::max(top_saddle, v.z);
    if (z > top_saddle && topology.edge(top_edge).z_lo <= z)
        return {z, top_edge};

    const auto& start = topology.vertex(descend_to_vertex(topology, point));
    int e;
    if (start.kind == VertexKind::interior_saddle) {
        if (z > start.z)
            e = start.edges.back();
        else
            return {z, start.edges.front()};
    } else {
        e = start.edges.front();
    }
    while (z > topology.edge(e).z_hi)
        e = topology.vertex(topology.edge(e).upper).edges.back();
    return {z, e};
}

}  // namespace irrlab
