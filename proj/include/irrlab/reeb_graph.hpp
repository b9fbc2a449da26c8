#pragma once

#include <string>
#include <vector>

#include "irrlab/potential.hpp"

namespace irrlab {

enum class VertexKind { exterior_min, interior_saddle, truncation_cap };

std::string to_string(VertexKind kind);

struct GraphVertex {
    int id = 0;
    double z = 0.0;
    VertexKind kind = VertexKind::exterior_min;
    Vec2 location;           // critical point; for the cap, NaN
    std::vector<int> edges;  // incident edge ids, lower edges first
    /// Saddles: unit eigenvector of the negative Hessian eigenvalue.
    Vec2 unstable_direction;
    double hessian_det = 0.0;
};

struct GraphEdge {
    int id = 0;
    double z_lo = 0.0;
    double z_hi = 0.0;
    int lower = 0;
    int upper = 0;
    /// Minima (vertex ids) inside the sublevel component bounded by this edge's level sets.
    std::vector<int> minima;

    double length() const { return z_hi - z_lo; }
};

struct GraphPoint {
    double z = 0.0;
    int edge_id = 0;
};

/// Reeb graph of a confining potential with minima and saddles only,
/// truncated at z_max. Immutable after build.
class GraphTopology {
public:
    GraphTopology(Scenario scenario, double z_max, std::vector<GraphVertex> vertices, std::vector<GraphEdge> edges);

    const Scenario& scenario() const { return scenario_; }
    double z_max() const { return z_max_; }
    const std::vector<GraphVertex>& vertices() const { return vertices_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    const GraphVertex& vertex(int id) const;
    const GraphEdge& edge(int id) const;

    /// Seed point for contour extraction on `edge_id`: its first minimum.
    Vec2 edge_seed(int edge_id) const;
    /// Lowest vertex value (global minimum of U).
    double z_min() const;

    /// Edge label used in tables: I1, I2, ...
    static std::string edge_label(int edge_id) { return "I" + std::to_string(edge_id + 1); }

private:
    Scenario scenario_;
    double z_max_;
    std::vector<GraphVertex> vertices_;
    std::vector<GraphEdge> edges_;
};

/// Merge tree of sublevel components: one edge per minimum, merged at each
/// saddle, with a cap vertex at z_max on the single unbounded edge.
/// Rejects degenerate critical points, local maxima and critical values
/// at or above z_max.
GraphTopology build_graph(const Scenario& scenario, double z_max = 4.0);

/// Q(x) = (U(x), edge of the level-set component through x).
/// Points that descend exactly onto a saddle below its value are assigned
/// to the lower edge on the -v side of the unstable direction v.
GraphPoint project(const GraphTopology& topology, Vec2 point);

/// Gradient descent to a critical point; returns the index of the nearest
/// vertex (minimum or saddle).
int descend_to_vertex(const GraphTopology& topology, Vec2 point);

}  // namespace irrlab
